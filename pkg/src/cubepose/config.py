"""Plain-text ``key=value`` config files shared by the decoder and benchmark."""

from __future__ import annotations

from .errors import FileFormatError


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise FileFormatError(f"{source}: line {lineno}: expected key=value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def parse_kv_file(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read(), source=str(path))
