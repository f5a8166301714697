"""
Tokenizers mapping text to token ids over a Vocabulary.

The built-in tokenizer splits on whitespace and punctuation. Archives exported from
external models ship a subword vocabulary and use ``WordPieceTokenizer``.
"""
import re
from typing import List, Protocol, Sequence

from loguru import logger

from pcode_backend.vocab import SPECIAL_TOKENS, Vocabulary
from pcode_config.errors import ConfigError

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

CONTINUATION = "##"


class Tokenizer(Protocol):
    """Anything that turns text into ids and back"""

    name: str

    def split(self, text: str) -> List[str]: ...

    def tokenize(self, text: str, vocab: Vocabulary) -> List[int]: ...

    def detokenize(self, ids: Sequence[int], vocab: Vocabulary) -> str: ...


def _check_specials(vocab: Vocabulary) -> None:
    missing = [tok for tok in SPECIAL_TOKENS if tok not in vocab]
    if missing:
        raise ConfigError(f"Vocabulary is missing special tokens: {missing}")


class WhitespacePunctTokenizer:
    """Splits into word runs and single punctuation characters"""

    name = "whitespace_punct"

    def split(self, text: str) -> List[str]:
        return _TOKEN_RE.findall(text)

    def tokenize(self, text: str, vocab: Vocabulary) -> List[int]:
        _check_specials(vocab)
        if not text:
            return []
        unk = vocab.unk_id
        table = vocab.token_to_id
        return [table.get(tok, unk) for tok in self.split(text)]

    def detokenize(self, ids: Sequence[int], vocab: Vocabulary) -> str:
        return " ".join(vocab.token_of(i) for i in ids)


class WordPieceTokenizer:
    """
    Greedy longest-match-first subword tokenizer.

    Words are first split like ``WhitespacePunctTokenizer``; each word is then
    matched against the vocabulary, with non-initial pieces prefixed by ``##``.
    A word with no full decomposition becomes a single UNK.
    """

    name = "wordpiece"

    def __init__(self, max_chars_per_word: int = 100):
        self.max_chars_per_word = max_chars_per_word
        self._base = WhitespacePunctTokenizer()

    def split(self, text: str) -> List[str]:
        return self._base.split(text)

    def _pieces(self, word: str, vocab: Vocabulary) -> List[str]:
        if len(word) > self.max_chars_per_word:
            return []
        pieces: List[str] = []
        start = 0
        while start < len(word):
            end = len(word)
            piece = None
            while start < end:
                candidate = word[start:end]
                if start > 0:
                    candidate = CONTINUATION + candidate
                if candidate in vocab:
                    piece = candidate
                    break
                end -= 1
            if piece is None:
                return []
            pieces.append(piece)
            start = end
        return pieces

    def word_pieces(self, word: str, vocab: Vocabulary) -> List[int]:
        pieces = self._pieces(word, vocab)
        if not pieces:
            return [vocab.unk_id]
        return [vocab.token_to_id[p] for p in pieces]

    def tokenize(self, text: str, vocab: Vocabulary) -> List[int]:
        _check_specials(vocab)
        ids: List[int] = []
        for word in self.split(text):
            ids.extend(self.word_pieces(word, vocab))
        return ids

    def detokenize(self, ids: Sequence[int], vocab: Vocabulary) -> str:
        out: List[str] = []
        for i in ids:
            tok = vocab.token_of(i)
            if tok.startswith(CONTINUATION) and out:
                out[-1] += tok[len(CONTINUATION):]
            else:
                out.append(tok)
        return " ".join(out)


def get_tokenizer(name: str) -> Tokenizer:
    if name == WhitespacePunctTokenizer.name:
        return WhitespacePunctTokenizer()
    if name == WordPieceTokenizer.name:
        return WordPieceTokenizer()
    raise ConfigError(f"Unknown tokenizer: {name!r}")


def first_piece_id(word: str, vocab: Vocabulary, tokenizer: Tokenizer) -> int:
    """Id of the first subword of ``word``; warns when the word spans several pieces"""
    ids = tokenizer.tokenize(word, vocab)
    if not ids:
        raise ConfigError(f"Word {word!r} produced no tokens")
    if len(ids) > 1:
        logger.warning(f"Word {word!r} tokenizes into {len(ids)} pieces; using the first")
    return ids[0]
