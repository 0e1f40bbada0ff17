"""Tokenizer for the MLIR subset. Comments (`// ...`) are stripped."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import IllegalCharacter

PUNCT = {
    "(": "lparen", ")": "rparen",
    "[": "lbracket", "]": "rbracket",
    "{": "lbrace", "}": "rbrace",
    "<": "langle", ">": "rangle",
    "=": "equals", ",": "comma", ":": "colon",
    "+": "plus", "-": "minus", "*": "star", "?": "question",
}

KEYWORDS = {
    "func.func", "affine.for", "affine.load", "affine.store", "affine.apply",
    "affine_map", "to", "step", "return", "func.return", "memref",
    "min", "max", "floordiv", "mod", "true", "false",
}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | ssa | mapref | symref | int | arrow | one of PUNCT values | eof
    text: str
    line: int
    col: int

    @property
    def span(self):
        return (self.line, self.col)


def _is_ident_start(c):
    return c.isalpha() or c == "_"


def _is_ident_char(c):
    return c.isalnum() or c in "._"


def tokenize(text: str) -> list:
    """Split text into tokens with line/column spans."""
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("->", i):
            tokens.append(Token("arrow", "->", line, col))
            i += 2
            col += 2
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c in "%#@":
            j = i + 1
            while j < n and _is_ident_char(text[j]):
                j += 1
            if j == i + 1:
                raise IllegalCharacter(c, line, col)
            kind = {"%": "ssa", "#": "mapref", "@": "symref"}[c]
            tokens.append(Token(kind, text[i:j], line, col))
            col += j - i
            i = j
            continue
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            tokens.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c in PUNCT:
            tokens.append(Token(PUNCT[c], c, line, col))
            i += 1
            col += 1
            continue
        raise IllegalCharacter(c, line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens
