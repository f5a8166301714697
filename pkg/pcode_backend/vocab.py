"""
Vocabulary shared by the tokenizer, the encoder and the verbalizer.
"""
import hashlib
import json
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from pydantic import BaseModel, Field, PrivateAttr, model_validator

from pcode_config.errors import ConfigError

CLS = "[CLS]"
SEP = "[SEP]"
MASK = "[MASK]"
PAD = "[PAD]"
UNK = "[UNK]"
BOS = "[BOS]"
EOS = "[EOS]"

SPECIAL_TOKENS = (PAD, UNK, CLS, SEP, MASK, BOS, EOS)

# Words every vocabulary needs for the default verbalizer.
RESERVED_WORDS = ("yes", "no")


def language_tag(language: str) -> str:
    """Surface form of a language tag, e.g. ``go`` -> ``<go>``"""
    return f"<{language.strip('<>').lower()}>"


class Vocabulary(BaseModel):
    """
    Bidirectional token <-> id mapping with special and language-tag ids.

    ``id_to_token`` is the single source of truth; ``token_to_id`` is rebuilt from it.
    """

    id_to_token: List[str] = Field(..., min_length=len(SPECIAL_TOKENS))
    languages: List[str] = Field(default_factory=list)

    _token_to_id: Dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _index(self) -> "Vocabulary":
        token_to_id: Dict[str, int] = {}
        for idx, token in enumerate(self.id_to_token):
            if token in token_to_id:
                raise ValueError(f"Duplicate token in vocabulary: {token!r}")
            token_to_id[token] = idx
        missing = [tok for tok in SPECIAL_TOKENS if tok not in token_to_id]
        if missing:
            raise ValueError(f"Vocabulary is missing special tokens: {missing}")
        for language in self.languages:
            if language_tag(language) not in token_to_id:
                raise ValueError(f"Language {language!r} has no tag token")
        self._token_to_id = token_to_id
        return self

    @property
    def token_to_id(self) -> Dict[str, int]:
        return self._token_to_id

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: object) -> bool:
        return token in self._token_to_id

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        return self._token_to_id.get(token, self.unk_id)

    def token_of(self, idx: int) -> str:
        return self.id_to_token[idx]

    @property
    def pad_id(self) -> int:
        return self._token_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self._token_to_id[UNK]

    @property
    def cls_id(self) -> int:
        return self._token_to_id[CLS]

    @property
    def sep_id(self) -> int:
        return self._token_to_id[SEP]

    @property
    def mask_id(self) -> int:
        return self._token_to_id[MASK]

    @property
    def bos_id(self) -> int:
        return self._token_to_id[BOS]

    @property
    def eos_id(self) -> int:
        return self._token_to_id[EOS]

    @property
    def special_ids(self) -> Dict[str, int]:
        return {tok: self._token_to_id[tok] for tok in SPECIAL_TOKENS}

    @property
    def language_tag_ids(self) -> Dict[str, int]:
        return {lang: self._token_to_id[language_tag(lang)] for lang in self.languages}

    def tag_id(self, language: str) -> int:
        """Id of a registered language tag"""
        tag = language_tag(language)
        if language.strip("<>").lower() not in self.languages or tag not in self._token_to_id:
            raise ConfigError(
                f"Language tag {tag} is not registered (known: {sorted(self.languages)})"
            )
        return self._token_to_id[tag]

    def sha256(self) -> str:
        payload = json.dumps(
            {"tokens": self.id_to_token, "languages": self.languages}, ensure_ascii=False
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @classmethod
    def build(
        cls,
        token_streams: Iterable[Sequence[str]],
        languages: Sequence[str] = (),
        max_size: int = 8000,
        min_freq: int = 1,
        reserved: Sequence[str] = RESERVED_WORDS,
    ) -> "Vocabulary":
        """
        Build a vocabulary from pre-split token streams.

        Order: special tokens, language tags, reserved words, then corpus tokens by
        descending frequency (ties broken lexicographically, so the result is
        deterministic). ``max_size`` bounds the total size.
        """
        languages = sorted({lang.lower() for lang in languages})
        head: List[str] = list(SPECIAL_TOKENS)
        head += [language_tag(lang) for lang in languages]
        head += [word for word in reserved if word not in head]
        if len(head) > max_size:
            raise ConfigError(f"max_size={max_size} cannot hold {len(head)} required tokens")

        counts: Counter = Counter()
        for stream in token_streams:
            counts.update(stream)
        taken = set(head)
        ranked = sorted(
            (tok for tok, n in counts.items() if n >= min_freq and tok not in taken),
            key=lambda tok: (-counts[tok], tok),
        )
        tokens = head + ranked[: max_size - len(head)]
        return cls(id_to_token=tokens, languages=languages)

    def save(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps({"id_to_token": self.id_to_token, "languages": self.languages},
                       ensure_ascii=False, indent=1),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        try:
            return cls(**data)
        except ValueError as e:
            raise ConfigError(f"Invalid vocabulary file {path}: {e}") from e

    def register_language(self, language: str) -> "Vocabulary":
        """Return a copy with an extra language tag appended at the end"""
        language = language.lower()
        if language in self.languages:
            return self
        tokens = list(self.id_to_token)
        tag = language_tag(language)
        if tag not in self._token_to_id:
            tokens.append(tag)
        return Vocabulary(id_to_token=tokens, languages=sorted(self.languages + [language]))


def require_ids(vocab: Optional[Vocabulary], *tokens: str) -> List[int]:
    """Ids for tokens that must be in-vocabulary"""
    if vocab is None:
        raise ConfigError("A vocabulary is required")
    missing = [tok for tok in tokens if tok not in vocab]
    if missing:
        raise ConfigError(f"Tokens missing from vocabulary: {missing}")
    return [vocab.token_to_id[tok] for tok in tokens]
