"""JSON-RPC 2.0 framing over byte streams (Content-Length headers)."""

from __future__ import annotations

import json
from typing import BinaryIO

JSONRPC_VERSION = "2.0"

# Error codes from the JSON-RPC / LSP specifications.
PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
SERVER_NOT_INITIALIZED = -32002


class TransportClosed(Exception):
    pass


def read_message(stream: BinaryIO) -> dict:
    """Read one framed message; raises TransportClosed at end of stream."""
    content_length = None
    while True:
        line = stream.readline()
        if not line:
            raise TransportClosed()
        line = line.strip()
        if not line:
            break
        if line.lower().startswith(b"content-length:"):
            content_length = int(line.split(b":", 1)[1])
    if content_length is None:
        raise TransportClosed("missing Content-Length header")
    body = stream.read(content_length)
    if len(body) < content_length:
        raise TransportClosed("truncated message body")
    return json.loads(body.decode("utf-8"))


def write_message(stream: BinaryIO, message: dict) -> None:
    message = dict(message)
    message.setdefault("jsonrpc", JSONRPC_VERSION)
    body = json.dumps(message).encode("utf-8")
    stream.write(f"Content-Length: {len(body)}\r\n\r\n".encode("ascii") + body)
    stream.flush()


def response(request_id, result=None, error=None) -> dict:
    message: dict = {"jsonrpc": JSONRPC_VERSION, "id": request_id}
    if error is not None:
        message["error"] = error
    else:
        message["result"] = result
    return message


def notification(method: str, params) -> dict:
    return {"jsonrpc": JSONRPC_VERSION, "method": method, "params": params}


def error_payload(code: int, message: str) -> dict:
    return {"code": code, "message": message}
