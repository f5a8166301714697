"""
Comment removal driven by per-language comment grammars.
"""
from typing import Dict, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field


class CommentGrammar(BaseModel):
    """Line / block comment markers and string delimiters of one language"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    line: Tuple[str, ...] = ()
    block: Tuple[Tuple[str, str], ...] = ()
    strings: Tuple[str, ...] = ('"', "'")
    raw_strings: Tuple[str, ...] = Field(default=(), description="Delimiters without escapes")
    escape: str = "\\"


_C_STYLE = CommentGrammar(line=("//",), block=(("/*", "*/"),))

COMMENT_GRAMMARS: Dict[str, CommentGrammar] = {
    "java": _C_STYLE,
    "solidity": _C_STYLE,
    "go": CommentGrammar(line=("//",), block=(("/*", "*/"),), raw_strings=("`",)),
    "javascript": CommentGrammar(line=("//",), block=(("/*", "*/"),), strings=('"', "'", "`")),
    "ruby": CommentGrammar(line=("#",), block=(("=begin", "=end"),)),
    "python": CommentGrammar(line=("#",), strings=('"""', "'''", '"', "'")),
}


def resolve_grammar(lang: str, extra: Optional[Dict[str, str]] = None) -> Optional[CommentGrammar]:
    """
    Grammar for ``lang``; ``extra`` maps further languages onto a registered one,
    e.g. ``{"toya": "java"}``.
    """
    lang = lang.lower()
    if lang in COMMENT_GRAMMARS:
        return COMMENT_GRAMMARS[lang]
    alias = (extra or {}).get(lang)
    return COMMENT_GRAMMARS.get(alias.lower()) if alias else None


def strip_comments(code: str, lang: str, extra: Optional[Dict[str, str]] = None) -> str:
    """
    Remove comment spans, leaving string literals and line breaks untouched.

    Unknown languages pass through unchanged with a warning.

    Examples:
        strip_comments("x = 1 // note", "go") -> "x = 1 "
        strip_comments("/* a */ b", "java")   -> " b"
    """
    grammar = resolve_grammar(lang, extra)
    if grammar is None:
        logger.warning(f"No comment grammar for language {lang!r}; leaving code unchanged")
        return code

    # Longest delimiters first so '"""' wins over '"'.
    quotes = sorted(
        [(q, True) for q in grammar.strings] + [(q, False) for q in grammar.raw_strings],
        key=lambda item: -len(item[0]),
    )
    out = []
    i, n = 0, len(code)
    in_string: Optional[Tuple[str, bool]] = None
    while i < n:
        if in_string is not None:
            delimiter, escapes = in_string
            if escapes and code.startswith(grammar.escape, i):
                out.append(code[i:i + len(grammar.escape) + 1])
                i += len(grammar.escape) + 1
            elif code.startswith(delimiter, i):
                out.append(delimiter)
                i += len(delimiter)
                in_string = None
            else:
                out.append(code[i])
                i += 1
            continue

        if any(code.startswith(marker, i) for marker in grammar.line):
            newline = code.find("\n", i)
            i = n if newline == -1 else newline
            continue
        block = next(((o, c) for o, c in grammar.block if code.startswith(o, i)), None)
        if block is not None:
            opener, closer = block
            end = code.find(closer, i + len(opener))
            i = n if end == -1 else end + len(closer)
            continue
        quote = next((q for q in quotes if code.startswith(q[0], i)), None)
        if quote is not None:
            in_string = quote
            out.append(quote[0])
            i += len(quote[0])
            continue
        out.append(code[i])
        i += 1
    return "".join(out)
