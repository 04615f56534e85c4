"""Byte-offset bookkeeping and conversion to LSP line/character positions.

All internal positions are byte offsets into the UTF-8 encoding of a
document. The Language Server Protocol talks 0-based lines and UTF-16 code
units, so conversion happens in exactly one place: here.
"""

from __future__ import annotations

from bisect import bisect_right


class LineIndex:
    """Maps byte offsets of one document to (line, UTF-16 character) pairs."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.data = text.encode("utf-8")
        starts = [0]
        for i, b in enumerate(self.data):
            if b == 0x0A:
                starts.append(i + 1)
        self._line_starts = starts

    @property
    def byte_len(self) -> int:
        return len(self.data)

    def line_count(self) -> int:
        return len(self._line_starts)

    def line_of_byte(self, offset: int) -> int:
        offset = max(0, min(offset, len(self.data)))
        return bisect_right(self._line_starts, offset) - 1

    def _line_span(self, line: int) -> tuple[int, int]:
        start = self._line_starts[line]
        end = (
            self._line_starts[line + 1]
            if line + 1 < len(self._line_starts)
            else len(self.data)
        )
        return start, end

    def byte_to_position(self, offset: int) -> tuple[int, int]:
        """Return (line, character) with character in UTF-16 code units."""
        offset = max(0, min(offset, len(self.data)))
        line = self.line_of_byte(offset)
        start, _ = self._line_span(line)
        prefix = self.data[start:offset].decode("utf-8", errors="replace")
        return line, utf16_len(prefix)

    def position_to_byte(self, line: int, character: int) -> int:
        """Inverse of byte_to_position; clamps to document bounds."""
        if line < 0:
            return 0
        if line >= len(self._line_starts):
            return len(self.data)
        start, end = self._line_span(line)
        content = self.data[start:end].decode("utf-8", errors="replace")
        units = 0
        for i, ch in enumerate(content):
            if units >= character:
                return start + len(content[:i].encode("utf-8"))
            units += utf16_len(ch)
        return end


def utf16_len(s: str) -> int:
    return sum(2 if ord(ch) > 0xFFFF else 1 for ch in s)


def byte_offsets(text: str) -> list[int]:
    """Cumulative byte offset of each character index, plus the total.

    Lets parsers that walk a str report byte positions without re-encoding
    prefixes: byte_offsets(text)[char_index] is the byte offset.
    """
    offs = [0] * (len(text) + 1)
    total = 0
    for i, ch in enumerate(text):
        offs[i] = total
        total += len(ch.encode("utf-8"))
    offs[len(text)] = total
    return offs
