"""Tolerant, lossless Solidity lexer.

Every byte of the input lands in exactly one token, so the concatenation of
token texts reproduces the source byte-for-byte.  Unterminated strings and
comments, stray bytes, and non-ASCII input never raise; the surrounding text
keeps lexing.  Spans are byte offsets into the UTF-8 encoding of the source.

Multi-character operators are folded into single tokens (``==``, ``+=``,
``>>=``...) but ``=+`` and ``=-`` deliberately are not: an assignment glyph
immediately followed by a sign stays two adjacent tokens, which is what the
wrong-operator detector keys on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple


class TokenKind(Enum):
    IDENTIFIER = "identifier"
    NUMBER = "number"
    STRING = "string"
    PUNCTUATION = "punctuation"
    KEYWORD = "keyword"
    COMMENT = "comment"
    WHITESPACE = "whitespace"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    start: int
    end: int

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    def is_code(self) -> bool:
        return self.kind not in (TokenKind.WHITESPACE, TokenKind.COMMENT)


KEYWORDS = frozenset(
    """
    abstract address anonymous as assembly bool break byte bytes calldata
    case catch constant constructor continue contract days default delete do
    else emit enum ether event external fallback false finney fixed for
    function gwei hours if immutable import indexed int interface internal is
    let library mapping memory minutes modifier new now override payable
    pragma private public pure receive return returns seconds storage string
    struct szabo this throw true try type ufixed uint using view virtual
    weeks wei while
    """.split()
)

_SIZED_TYPE_RE = re.compile(r"^(?:u?int\d+|bytes\d+|u?fixed\d+x\d+)$")

# Longest match first.  =+ and =- intentionally absent.
_PUNCT3 = (">>=", "<<=", "**=")
_PUNCT2 = (
    "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=",
    "|=", "&=", "^=", "++", "--", "**", "<<", ">>", "=>", "->", ":=",
)

_WS_RE = re.compile(r"[ \t\r\n\f\v]+")
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_HEX_RE = re.compile(r"0[xX][0-9a-fA-F_]+")
_NUM_RE = re.compile(r"\d[\d_]*(?:\.\d[\d_]*)*(?:[eE][+-]?\d+)?")


def _classify_word(word: str) -> TokenKind:
    if word in KEYWORDS or _SIZED_TYPE_RE.match(word):
        return TokenKind.KEYWORD
    return TokenKind.IDENTIFIER


def _scan_string(source: str, i: int) -> int:
    """Return the char index one past the string starting at ``i``.

    An unterminated string ends at the line break (exclusive) or end of input.
    """

    quote = source[i]
    n = len(source)
    j = i + 1
    while j < n:
        c = source[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            return j + 1
        if c == "\n":
            return j
        j += 1
    return n


def lex(source: str) -> List[Token]:
    tokens: List[Token] = []
    n = len(source)
    i = 0
    while i < n:
        c = source[i]
        m = _WS_RE.match(source, i)
        if m:
            tokens.append(Token(TokenKind.WHITESPACE, m.group(), i, m.end()))
            i = m.end()
            continue
        if c == "/" and source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j < 0 else j
            tokens.append(Token(TokenKind.COMMENT, source[i:j], i, j))
            i = j
            continue
        if c == "/" and source.startswith("/*", i):
            j = source.find("*/", i + 2)
            j = n if j < 0 else j + 2
            tokens.append(Token(TokenKind.COMMENT, source[i:j], i, j))
            i = j
            continue
        if c in "'\"":
            j = _scan_string(source, i)
            tokens.append(Token(TokenKind.STRING, source[i:j], i, j))
            i = j
            continue
        if c.isdigit():
            m = _HEX_RE.match(source, i) or _NUM_RE.match(source, i)
            tokens.append(Token(TokenKind.NUMBER, m.group(), i, m.end()))
            i = m.end()
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            word = m.group()
            tokens.append(Token(_classify_word(word), word, i, m.end()))
            i = m.end()
            continue
        three, two = source[i : i + 3], source[i : i + 2]
        if three in _PUNCT3:
            tokens.append(Token(TokenKind.PUNCTUATION, three, i, i + 3))
            i += 3
            continue
        if two in _PUNCT2:
            tokens.append(Token(TokenKind.PUNCTUATION, two, i, i + 2))
            i += 2
            continue
        tokens.append(Token(TokenKind.PUNCTUATION, c, i, i + 1))
        i += 1

    if source.isascii():
        return tokens
    return _rebase_to_bytes(source, tokens)


def _rebase_to_bytes(source: str, tokens: List[Token]) -> List[Token]:
    """Convert char-indexed spans to byte offsets for non-ASCII input."""

    offsets = [0]
    for ch in source:
        offsets.append(offsets[-1] + len(ch.encode("utf-8", "surrogateescape")))
    return [
        Token(t.kind, t.text, offsets[t.start], offsets[t.end]) for t in tokens
    ]


def code_tokens(tokens: List[Token]) -> List[Token]:
    """Tokens with whitespace and comments dropped."""

    return [t for t in tokens if t.is_code()]
