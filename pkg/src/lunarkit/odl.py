"""PDS3-style ODL (Object Description Language) label parsing.

Covers the grammar subset found in Chang'E-era PDS3 labels: keyword = value
assignments, ^POINTER statements, nested OBJECT/GROUP blocks, /* comments */,
units in angle brackets, (sequences) and {sets} nesting at most one level,
quoted text spanning lines, and namespaced keywords (NS:NAME). A label is
terminated by END; anything after END (e.g. an attached binary payload) is
never read.

Everything here is a pure function over immutable values; labels can be
shared freely between threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import (
    MalformedValueError,
    MissingEndError,
    NeedsRecordBytesError,
    NotFoundError,
    UnbalancedBlockError,
)

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_:]*")
# ISO-8601 date / datetime, kept verbatim. Day-of-year dates (2019-003) included.
_DATETIME_RE = re.compile(
    r"\d{4}-\d{1,3}(?:-\d{1,2})?"
    r"(?:T\d{1,2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{1,2}(?::\d{2})?)?)?"
)
_REAL_RE = re.compile(r"[+-]?(?:\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)")
_INT_RE = re.compile(r"[+-]?\d+")


@dataclass(frozen=True)
class OdlValue:
    """One ODL value: a tagged variant.

    kind is one of "integer", "real", "text", "symbol", "datetime",
    "sequence", "set". For scalars, value holds the payload (int, float or
    str); for sequence/set it holds a tuple of OdlValue. unit is only ever
    set on reals and holds the unit text without its angle brackets.
    """

    kind: str
    value: object
    unit: str | None = None

    @staticmethod
    def integer(v: int) -> "OdlValue":
        return OdlValue("integer", v)

    @staticmethod
    def real(v: float, unit: str | None = None) -> "OdlValue":
        return OdlValue("real", v, unit)

    @staticmethod
    def text(s: str) -> "OdlValue":
        return OdlValue("text", s)

    @staticmethod
    def symbol(s: str) -> "OdlValue":
        return OdlValue("symbol", s)

    @staticmethod
    def datetime(s: str) -> "OdlValue":
        return OdlValue("datetime", s)

    @staticmethod
    def sequence(items) -> "OdlValue":
        return OdlValue("sequence", tuple(items))

    @staticmethod
    def set_(items) -> "OdlValue":
        return OdlValue("set", tuple(items))


@dataclass(frozen=True)
class OdlStatement:
    keyword: str            # stored as written; pointer keywords begin with "^"
    value: OdlValue
    kind: str = "assignment"  # "assignment" | "pointer"


@dataclass(frozen=True)
class OdlBlock:
    kind: str               # "OBJECT" | "GROUP"
    name: str
    body: "OdlLabel"


@dataclass(frozen=True)
class OdlLabel:
    statements: tuple[OdlStatement, ...] = ()
    children: tuple[OdlBlock, ...] = ()


@dataclass(frozen=True)
class PointerInfo:
    """Resolved ^POINTER target: where the payload lives.

    target_file None means the payload is attached (same file as the label).
    offset_unit is always "bytes" on values returned by pointer_target; the
    "records" unit exists for callers constructing unresolved infos.
    """

    target_file: str | None
    offset: int
    offset_unit: str = "bytes"


class _Lexer:
    """Incremental scanner; tokens after END are never produced."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1

    def error(self, msg: str) -> MalformedValueError:
        return MalformedValueError(msg, self.line)

    def _check_ascii(self, chunk: str) -> None:
        # Only quoted strings may carry bytes >= 0x80.
        for ch in chunk:
            if ord(ch) >= 0x80:
                raise self.error(f"non-ASCII byte 0x{ord(ch):02x} outside quoted string")

    def _advance(self, n: int) -> None:
        chunk = self.text[self.pos : self.pos + n]
        self.line += chunk.count("\n")
        self.pos += n

    def _skip_space_and_comments(self) -> None:
        text, n = self.text, len(self.text)
        while self.pos < n:
            c = text[self.pos]
            if c in " \t\r\n\f\v":
                if c == "\n":
                    self.line += 1
                self.pos += 1
            elif text.startswith("/*", self.pos):
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated comment")
                self._check_ascii(text[self.pos : end])
                self._advance(end + 2 - self.pos)
            else:
                return

    def next(self) -> tuple[str, object]:
        """Return (token_type, payload). Types: ident, pointer, int, real,
        datetime, text, symbol, unit, '=', '(', ')', '{', '}', ',', eof."""
        self._skip_space_and_comments()
        text = self.text
        if self.pos >= len(text):
            return ("eof", None)
        c = text[self.pos]
        if ord(c) >= 0x80:
            raise self.error(f"non-ASCII byte 0x{ord(c):02x} outside quoted string")
        if c in "=(){},":
            self.pos += 1
            return (c, c)
        if c == '"':
            end = text.find('"', self.pos + 1)
            if end < 0:
                raise self.error("unterminated text string")
            content = text[self.pos + 1 : end]
            self._advance(end + 1 - self.pos)
            return ("text", content)
        if c == "'":
            end = text.find("'", self.pos + 1)
            if end < 0:
                raise self.error("unterminated symbol string")
            content = text[self.pos + 1 : end]
            if "\n" in content:
                raise self.error("symbol string spans lines")
            self._advance(end + 1 - self.pos)
            return ("symbol", content)
        if c == "<":
            end = text.find(">", self.pos + 1)
            if end < 0:
                raise self.error("unterminated unit")
            content = text[self.pos + 1 : end]
            self._check_ascii(content)
            self._advance(end + 1 - self.pos)
            return ("unit", content)
        if c == "^":
            m = _IDENT_RE.match(text, self.pos + 1)
            if not m:
                raise self.error("bad pointer keyword")
            self.pos = m.end()
            return ("pointer", "^" + m.group())
        if c.isdigit() or c in "+-.":
            m = _DATETIME_RE.match(text, self.pos)
            if m:
                self.pos = m.end()
                return ("datetime", m.group())
            m = _REAL_RE.match(text, self.pos)
            if m:
                v = float(m.group())
                if not math.isfinite(v):
                    raise self.error(f"real out of range: {m.group()}")
                self.pos = m.end()
                return ("real", v)
            m = _INT_RE.match(text, self.pos)
            if m:
                v = int(m.group())
                if not INT64_MIN <= v <= INT64_MAX:
                    raise self.error(f"integer outside signed 64-bit range: {m.group()}")
                self.pos = m.end()
                return ("int", v)
            raise self.error(f"bad numeric token at {text[self.pos:self.pos+16]!r}")
        m = _IDENT_RE.match(text, self.pos)
        if m:
            self.pos = m.end()
            return ("ident", m.group())
        raise self.error(f"unexpected character {c!r}")


class _Parser:
    def __init__(self, text: str):
        self.lex = _Lexer(text)
        self._pushed: tuple[str, object] | None = None

    def next(self) -> tuple[str, object]:
        if self._pushed is not None:
            tok, self._pushed = self._pushed, None
            return tok
        return self.lex.next()

    def push(self, tok: tuple[str, object]) -> None:
        self._pushed = tok

    def expect(self, ttype: str) -> object:
        tok = self.next()
        if tok[0] != ttype:
            raise self.lex.error(f"expected {ttype!r}, got {tok[0]!r}")
        return tok[1]

    def parse_value(self, depth: int = 0) -> OdlValue:
        tok = self.next()
        ttype, payload = tok
        if ttype in ("(", "{"):
            if depth >= 2:
                raise self.lex.error("sequences/sets nest at most one level")
            closer = ")" if ttype == "(" else "}"
            items: list[OdlValue] = []
            nxt = self.next()
            if nxt[0] != closer:
                self.push(nxt)
                while True:
                    items.append(self.parse_value(depth + 1))
                    sep = self.next()
                    if sep[0] == closer:
                        break
                    if sep[0] != ",":
                        raise self.lex.error(f"expected ',' or {closer!r} in {ttype}...{closer}")
            make = OdlValue.sequence if ttype == "(" else OdlValue.set_
            return make(items)
        if ttype == "int":
            unit = self._maybe_unit()
            if unit is not None:
                return OdlValue.real(float(payload), unit)
            return OdlValue.integer(payload)
        if ttype == "real":
            return OdlValue.real(payload, self._maybe_unit())
        if ttype == "text":
            return OdlValue.text(payload)
        if ttype == "symbol":
            return OdlValue.symbol(payload)
        if ttype == "datetime":
            return OdlValue.datetime(payload)
        if ttype == "ident":
            return OdlValue.symbol(payload)
        raise self.lex.error(f"token {ttype!r} does not start a value")

    def _maybe_unit(self) -> str | None:
        tok = self.next()
        if tok[0] == "unit":
            return tok[1]
        self.push(tok)
        return None

    def parse_block(self, opener: tuple[str, str] | None) -> OdlLabel:
        """Parse statements until END (top level) or the matching closer.

        opener is (kind, name) inside an OBJECT/GROUP, None at top level.
        """
        statements: list[OdlStatement] = []
        children: list[OdlBlock] = []
        while True:
            ttype, payload = self.next()
            if ttype == "eof":
                if opener is not None:
                    raise UnbalancedBlockError(
                        f"{opener[0]} = {opener[1]} has no matching END_{opener[0]}"
                    )
                raise MissingEndError("label has no END statement")
            if ttype == "pointer":
                self.expect("=")
                statements.append(OdlStatement(payload, self.parse_value(), "pointer"))
                continue
            if ttype != "ident":
                raise self.lex.error(f"expected a keyword, got {ttype!r}")
            upper = payload.upper()
            if upper == "END":
                if opener is not None:
                    raise UnbalancedBlockError(
                        f"{opener[0]} = {opener[1]} has no matching END_{opener[0]}"
                    )
                return OdlLabel(tuple(statements), tuple(children))
            if upper in ("OBJECT", "GROUP"):
                self.expect("=")
                name = self.expect("ident")
                body = self.parse_block((upper, name))
                children.append(OdlBlock(upper, name, body))
                continue
            if upper in ("END_OBJECT", "END_GROUP"):
                kind = upper[4:]
                tok = self.next()
                name = None
                if tok[0] == "=":
                    name = self.expect("ident")
                else:
                    self.push(tok)
                if opener is None or opener[0] != kind:
                    raise UnbalancedBlockError(f"{payload} without matching {kind} opener")
                if name is not None and name.upper() != opener[1].upper():
                    raise UnbalancedBlockError(
                        f"{payload} = {name} does not close {opener[0]} = {opener[1]}"
                    )
                return OdlLabel(tuple(statements), tuple(children))
            self.expect("=")
            statements.append(OdlStatement(payload, self.parse_value(), "assignment"))


def parse_odl(text: str) -> OdlLabel:
    """Parse a complete ODL label; content after the END statement is ignored."""
    return _Parser(text).parse_block(None)


def lookup(label: OdlLabel, path: list[str] | tuple[str, ...]) -> OdlValue:
    """Resolve a path of block names ending in a keyword, case-insensitively.

    Returns the first match in document order. Raises NotFoundError if the
    path does not resolve.
    """
    if not path:
        raise NotFoundError("empty lookup path")
    head, rest = path[0], path[1:]
    if not rest:
        for stmt in label.statements:
            if stmt.keyword.upper() == head.upper():
                return stmt.value
    else:
        for child in label.children:
            if child.name.upper() == head.upper():
                try:
                    return lookup(child.body, rest)
                except NotFoundError:
                    continue
    raise NotFoundError(f"path {'/'.join(path)} not found")


def find_block(label: OdlLabel, name: str, kind: str | None = None) -> OdlLabel:
    """Return the body of the first OBJECT/GROUP named `name` (preorder)."""
    for child in label.children:
        if child.name.upper() == name.upper() and (kind is None or child.kind == kind):
            return child.body
    for child in label.children:
        try:
            return find_block(child.body, name, kind)
        except NotFoundError:
            continue
    raise NotFoundError(f"no {kind or 'OBJECT/GROUP'} named {name}")


def _find_pointer(label: OdlLabel, name: str) -> OdlValue:
    for stmt in label.statements:
        if stmt.kind == "pointer" and stmt.keyword.upper() == "^" + name.upper():
            return stmt.value
    for child in label.children:
        try:
            return _find_pointer(child.body, name)
        except NotFoundError:
            continue
    raise NotFoundError(f"no pointer ^{name}")


def pointer_target(
    label: OdlLabel, name: str, record_bytes: int | None = None
) -> PointerInfo:
    """Resolve a ^NAME pointer to a file and byte offset.

    Three forms are accepted: "FILE" (detached, offset 0), N (attached,
    1-based record offset), and ("FILE", N). Record offsets need
    record_bytes to resolve; byte offset = (N - 1) * record_bytes.
    """
    value = _find_pointer(label, name)

    def record_offset(v: OdlValue) -> int:
        if v.kind != "integer" or v.value < 1:
            raise MalformedValueError(f"pointer ^{name}: bad record offset {v!r}")
        if record_bytes is None:
            raise NeedsRecordBytesError(
                f"pointer ^{name} uses a record offset but RECORD_BYTES is unknown"
            )
        return (v.value - 1) * record_bytes

    if value.kind in ("text", "symbol"):
        return PointerInfo(value.value, 0, "bytes")
    if value.kind == "integer":
        return PointerInfo(None, record_offset(value), "bytes")
    if value.kind == "sequence" and len(value.value) == 2:
        fname, off = value.value
        if fname.kind in ("text", "symbol"):
            return PointerInfo(fname.value, record_offset(off), "bytes")
    raise MalformedValueError(f"pointer ^{name}: unsupported value form {value!r}")


_RESERVED = {"END", "OBJECT", "GROUP", "END_OBJECT", "END_GROUP"}


def _format_real(v: float) -> str:
    s = repr(float(v))
    # repr of a whole float is like '20.0'; of small ones '1e-05' -- both re-parse.
    return s


def _format_value(value: OdlValue) -> str:
    if value.kind == "integer":
        return str(value.value)
    if value.kind == "real":
        s = _format_real(value.value)
        return f"{s} <{value.unit}>" if value.unit is not None else s
    if value.kind == "text":
        return f'"{value.value}"'
    if value.kind == "symbol":
        s = value.value
        if _IDENT_RE.fullmatch(s) and s.upper() not in _RESERVED:
            return s
        return f"'{s}'"
    if value.kind == "datetime":
        return value.value
    if value.kind in ("sequence", "set"):
        items = ", ".join(_format_value(v) for v in value.value)
        return f"({items})" if value.kind == "sequence" else f"{{{items}}}"
    raise ValueError(f"unknown value kind {value.kind!r}")


def serialize_odl(label: OdlLabel) -> str:
    """Emit canonical ODL text: one statement per line, two-space indents,
    LF endings. The output re-parses to a structurally equal label."""
    lines: list[str] = []

    def emit(block: OdlLabel, depth: int) -> None:
        pad = "  " * depth
        for stmt in block.statements:
            lines.append(f"{pad}{stmt.keyword} = {_format_value(stmt.value)}")
        for child in block.children:
            lines.append(f"{pad}{child.kind} = {child.name}")
            emit(child.body, depth + 1)
            lines.append(f"{pad}END_{child.kind} = {child.name}")

    emit(label, 0)
    lines.append("END")
    return "\n".join(lines) + "\n"


def _value_to_json(value: OdlValue):
    if value.kind == "real" and value.unit is not None:
        return {"value": value.value, "unit": value.unit}
    if value.kind in ("sequence", "set"):
        return [_value_to_json(v) for v in value.value]
    return value.value


def label_to_json(label: OdlLabel) -> dict:
    """JSON rendering of the tree: keyword -> value, children nested.

    Duplicate keywords keep the first occurrence (matching lookup); the
    canonical text form is the lossless serialization.
    """
    out: dict = {}
    for stmt in label.statements:
        out.setdefault(stmt.keyword, _value_to_json(stmt.value))
    for child in label.children:
        out.setdefault(child.name, label_to_json(child.body))
    return out
