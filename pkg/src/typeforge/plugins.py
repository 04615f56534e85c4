"""Editor plugin bundle rendering (syntax highlighting + LSP client config).

Bundles for VSCode, NeoVim, and Vim are rendered from embedded annotated
templates where every placeholder has the form ``${name}``. Generation is
a pure function of the config, the collected syntax elements, and the
templates, so outputs are digest-stable across runs. Vim and NeoVim share
one syntax-file format, so the same rendered file lands in both bundles.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

SUPPORTED_CLIENTS = ("vscode", "neovim", "vim")

_PLACEHOLDER_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


class UnresolvedPlaceholder(Exception):
    def __init__(self, names: Sequence[str]) -> None:
        self.names = tuple(sorted(set(names)))
        super().__init__(f"unresolved placeholders: {', '.join(self.names)}")


class InvalidConfig(Exception):
    pass


class OutputCollision(Exception):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    generator_version: str
    clients: tuple[str, ...]
    language_name: str
    launcher: str
    file_ext: str
    bin_path: str

    def __post_init__(self) -> None:
        if not self.clients:
            raise InvalidConfig("clients must be non-empty")
        unknown = set(self.clients) - set(SUPPORTED_CLIENTS)
        if unknown:
            raise InvalidConfig(f"unknown clients {sorted(unknown)}")
        if not self.file_ext:
            raise InvalidConfig("fileExt must be non-empty")
        if self.file_ext.startswith("."):
            object.__setattr__(self, "file_ext", self.file_ext.lstrip("."))

    @classmethod
    def from_json(cls, data: Mapping) -> "GeneratorConfig":
        try:
            return cls(
                generator_version=data["generatorVersion"],
                clients=tuple(data["clients"]),
                language_name=data["languageName"],
                launcher=data["launcher"],
                file_ext=data["fileExt"],
                bin_path=data["binPath"],
            )
        except KeyError as exc:
            raise InvalidConfig(f"missing config field {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


SyntaxElements = dict[str, tuple[str, ...]]


def collect_syntax_elements(language) -> SyntaxElements:
    """Union of the artifacts' category terminals, duplicate-free, sorted."""
    merged: dict[str, set[str]] = {}
    for artifact in language.artifacts.values():
        for category, terminals in artifact.production.categories.items():
            merged.setdefault(category, set()).update(terminals)
    return {category: tuple(sorted(terms)) for category, terms in sorted(merged.items())}


def render_template(template: str, bindings: Mapping[str, str]) -> str:
    """Replace every ``${name}`` from the bindings, in one pass.

    Substituted values are never re-expanded. All placeholders must
    resolve; the misses are reported together.
    """
    missing = [
        name for name in _PLACEHOLDER_RE.findall(template) if name not in bindings
    ]
    if missing:
        raise UnresolvedPlaceholder(missing)
    return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), template)


def _template(client: str, name: str) -> str:
    return (
        resources.files("typeforge") / "templates" / client / name
    ).read_text(encoding="utf-8")


@dataclass
class GenerationManifest:
    out_dir: str
    files: dict[str, str] = field(default_factory=dict)

    def digest(self) -> str:
        rollup = hashlib.sha256()
        for path in sorted(self.files):
            rollup.update(path.encode())
            rollup.update(self.files[path].encode())
        return rollup.hexdigest()

    def to_json(self) -> dict:
        return {"outDir": self.out_dir, "files": dict(sorted(self.files.items()))}


# Vim highlight groups per category; unlisted categories fall back to
# Identifier.
_VIM_LINKS = {
    "keyword": "Keyword",
    "operator": "Operator",
    "punctuation": "Delimiter",
    "string": "String",
    "number": "Number",
    "comment": "Comment",
    "type": "Type",
}

_WORD_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _tm_scope(category: str, language: str) -> str:
    if category == "keyword":
        return f"keyword.control.{language}"
    return f"{category}.{language}"


def _tm_match(terminals: Sequence[str]) -> str:
    words = [t for t in terminals if _WORD_RE.match(t)]
    symbols = [t for t in terminals if not _WORD_RE.match(t)]
    parts = []
    if words:
        parts.append(r"\b(" + "|".join(re.escape(w) for w in words) + r")\b")
    if symbols:
        parts.append("(" + "|".join(re.escape(s) for s in symbols) + ")")
    return "|".join(parts)


def build_tm_grammar(config: GeneratorConfig, elements: SyntaxElements) -> dict:
    language = config.language_name
    repository = {}
    for category, terminals in elements.items():
        if not terminals:
            continue
        repository[category] = {
            "patterns": [
                {"name": _tm_scope(category, language), "match": _tm_match(terminals)}
            ]
        }
    return {
        "name": language,
        "scopeName": f"source.{language}",
        "patterns": [{"include": f"#{category}"} for category in sorted(repository)],
        "repository": repository,
    }


def _vim_escape(symbol: str) -> str:
    # Escape characters special to vim's magic patterns plus the delimiter.
    out = []
    for ch in symbol:
        out.append("\\" + ch if ch in "\\/*.~[]^$" else ch)
    return "".join(out)


def build_vim_syntax_rules(config: GeneratorConfig, elements: SyntaxElements) -> str:
    language = config.language_name
    lines = []
    for category, terminals in elements.items():
        if not terminals:
            continue
        group = f"{language}{category.capitalize()}"
        words = [t for t in terminals if _WORD_RE.match(t)]
        symbols = [t for t in terminals if not _WORD_RE.match(t)]
        if words:
            lines.append(f"syn keyword {group} {' '.join(words)}")
        for symbol in symbols:
            lines.append(f"syn match {group} /{_vim_escape(symbol)}/")
        lines.append(f"hi def link {group} {_VIM_LINKS.get(category, 'Identifier')}")
    return "\n".join(lines)


def _server_argv(config: GeneratorConfig) -> list[str]:
    argv = [part for part in config.launcher.split(" ") if part]
    argv.append(config.bin_path)
    return argv


def generate(
    config: GeneratorConfig,
    elements: SyntaxElements,
    out_dir: str | Path,
) -> GenerationManifest:
    """Write the plugin bundles for every requested client.

    Returns a manifest mapping written paths (relative to out_dir) to
    sha256 digests. Identical inputs produce identical outputs.
    """
    out = Path(out_dir)
    manifest = GenerationManifest(str(out))
    base_bindings = {
        "generatorVersion": config.generator_version,
        "languageName": config.language_name,
        "launcher": config.launcher,
        "fileExt": config.file_ext,
        "binPath": config.bin_path,
    }
    argv = _server_argv(config)
    language = config.language_name
    syntax_vim = render_template(
        _template("shared", "syntax.vim.tpl"),
        dict(base_bindings, syntaxRules=build_vim_syntax_rules(config, elements)),
    )
    tm_grammar = json.dumps(build_tm_grammar(config, elements), indent=2, sort_keys=True) + "\n"

    outputs: dict[str, str] = {}

    def emit(rel_path: str, content: str) -> None:
        if rel_path in outputs:
            raise OutputCollision(f"two outputs target {rel_path}")
        outputs[rel_path] = content

    for client in config.clients:
        if client == "vscode":
            emit(
                "vscode/package.json",
                render_template(_template("vscode", "package.json.tpl"), base_bindings),
            )
            emit(
                "vscode/language-configuration.json",
                render_template(
                    _template("vscode", "language-configuration.json.tpl"), base_bindings
                ),
            )
            emit(
                "vscode/tsconfig.json",
                render_template(_template("vscode", "tsconfig.json.tpl"), base_bindings),
            )
            emit(
                "vscode/src/extension.ts",
                render_template(_template("vscode", "extension.ts.tpl"), base_bindings),
            )
            emit(
                "vscode/src/stubConfig.ts",
                render_template(_template("vscode", "stubConfig.ts.tpl"), base_bindings),
            )
            emit(f"vscode/syntaxes/{language}.tmLanguage.json", tm_grammar)
        elif client == "neovim":
            emit(
                f"neovim/lua/{language}.lua",
                render_template(
                    _template("neovim", "config.lua.tpl"),
                    dict(
                        base_bindings,
                        serverArgvLua=", ".join(json.dumps(a) for a in argv),
                    ),
                ),
            )
            emit(f"neovim/syntax/{language}.vim", syntax_vim)
        elif client == "vim":
            emit(
                "vim/coc-settings.json",
                render_template(
                    _template("vim", "coc-settings.json.tpl"),
                    dict(
                        base_bindings,
                        serverCommand=argv[0],
                        serverArgsJson=", ".join(json.dumps(a) for a in argv[1:]),
                    ),
                ),
            )
            emit(f"vim/syntax/{language}.vim", syntax_vim)

    for rel_path, content in outputs.items():
        target = out / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
        manifest.files[rel_path] = hashlib.sha256(content.encode()).hexdigest()
    return manifest
