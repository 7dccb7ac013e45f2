"""Tokenizer for SPARQL query text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ergstore.sparql.ast import SparqlSyntaxError

_PN_CHARS_BASE = (
    "A-Za-zÀ-ÖØ-öø-˿Ͱ-ͽͿ-῿"
    "‌-‍⁰-↏Ⰰ-⿯、-퟿豈-﷏ﷰ-�"
)
_PN_CHARS_U = _PN_CHARS_BASE + "_"
_PN_CHARS = _PN_CHARS_U + r"\-0-9·̀-ͯ‿-⁀"
_PN_PREFIX = f"[{_PN_CHARS_BASE}](?:[{_PN_CHARS}.]*[{_PN_CHARS}])?"
_PLX = r"%[0-9A-Fa-f]{2}|\\[_~.\-!$&'()*+,;=/?#@%]"
_PN_LOCAL = (
    f"(?:[{_PN_CHARS_U}:0-9]|{_PLX})"
    f"(?:(?:[{_PN_CHARS}.:]|{_PLX})*(?:[{_PN_CHARS}:]|{_PLX}))?"
)

_TOKENS = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRIREF", r'<[^<>"{}|^`\\\x00-\x20]*>'),
    ("PNAME_LN", f"(?:{_PN_PREFIX})?:{_PN_LOCAL}"),
    ("PNAME_NS", f"(?:{_PN_PREFIX})?:"),
    ("BLANK", f"_:[{_PN_CHARS_U}0-9](?:[{_PN_CHARS}.]*[{_PN_CHARS}])?"),
    ("VAR", f"[?$][{_PN_CHARS_U}0-9][{_PN_CHARS_U}0-9·̀-ͯ‿-⁀]*"),
    ("LANGTAG", r"@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*"),
    ("DOUBLE", r"(?:[0-9]+\.[0-9]*[eE][+-]?[0-9]+|\.[0-9]+[eE][+-]?[0-9]+|[0-9]+[eE][+-]?[0-9]+)"),
    ("DECIMAL", r"[0-9]*\.[0-9]+"),
    ("INTEGER", r"[0-9]+"),
    ("STRING_LONG1", r"'''(?:(?:'|'')?(?:[^'\\]|\\.))*'''"),
    ("STRING_LONG2", r'"""(?:(?:"|"")?(?:[^"\\]|\\.))*"""'),
    ("STRING1", r"'(?:[^'\\\n\r]|\\.)*'"),
    ("STRING2", r'"(?:[^"\\\n\r]|\\.)*"'),
    ("ANON", r"\[[ \t\r\n]*\]"),
    ("NIL", r"\([ \t\r\n]*\)"),
    ("NAME", r"[A-Za-z_][A-Za-z_0-9]*"),
    ("OP", r"\^\^|&&|\|\||!=|<=|>=|[{}()\[\].,;*+?/|^!=<>\-]"),
]
_MASTER = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKENS))

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_UESC = re.compile(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def upper(self) -> str:
        return self.text.upper()


def unescape_string(body: str, line: int, column: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(body):
            raise SparqlSyntaxError("dangling escape in string", line, column)
        nxt = body[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in "uU":
            m = _UESC.match(body, i)
            if not m:
                raise SparqlSyntaxError("bad unicode escape in string", line, column)
            code = int(m.group(1) or m.group(2), 16)
            if code > 0x10FFFF:
                raise SparqlSyntaxError("unicode escape out of range", line, column)
            out.append(chr(code))
            i = m.end()
        else:
            raise SparqlSyntaxError(f"unknown escape \\{nxt}", line, column)
    return "".join(out)


def _decode_uchars(text: str) -> str:
    """Codepoint escapes are allowed anywhere in the query text."""
    if "\\u" not in text and "\\U" not in text:
        return text
    return _UESC.sub(lambda m: chr(int(m.group(1) or m.group(2), 16)) if int(m.group(1) or m.group(2), 16) <= 0x10FFFF else m.group(0), text)


def tokenize(text: str) -> list[Token]:
    text = _decode_uchars(text)
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _MASTER.match(text, pos)
        if m is None:
            raise SparqlSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens
