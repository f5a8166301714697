"""
Synthetic two-dialect toy language.

Both dialects share one grammar, operators and identifier pool but use disjoint
keyword vocabularies. Each program implements one of a fixed set of behaviours in
one of several syntactic variants, so clones (same behaviour) can differ in loop
form, statement order and names.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pcode_data.schema import RawRecord

KEYWORDS = ("func", "let", "for", "in", "while", "if", "else", "return", "len",
            "range", "print", "true", "false", "and", "not")

DIALECTS: Dict[str, Dict[str, str]] = {
    "toya": {kw: kw for kw in KEYWORDS},
    "toyb": {
        "func": "proc", "let": "var", "for": "each", "in": "from", "while": "until",
        "if": "when", "else": "otherwise", "return": "give", "len": "size",
        "range": "span", "print": "show", "true": "on", "false": "off",
        "and": "also", "not": "never",
    },
}

# Comment grammar each dialect borrows when preprocessing.
DIALECT_GRAMMARS = {"toya": "java", "toyb": "java"}

IDENTIFIERS = ("x", "y", "z", "n", "k", "v", "w", "i", "j", "acc", "res", "val", "tmp",
               "cur", "item", "total", "out", "data", "arr", "nums", "seq", "best", "cnt")
FUNCTION_NAMES = ("f", "g", "h", "calc", "run", "solve", "work", "compute", "helper", "task")


@dataclass(frozen=True)
class Behaviour:
    name: str
    summary: str
    description: str
    variants: Tuple[str, ...]


# {pad} marks where filler statements may go; {a}..{d} are identifiers.
BEHAVIOURS: Tuple[Behaviour, ...] = (
    Behaviour("sum", "sum of list", "add up every element of a list", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 0 ; {for} {c} {in} {a} {{ {b} = {b} + {c} ; }} {return} {b} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 0 ; {let} {c} = 0 ; {while} {c} < {len} ( {a} ) {{ {b} = {b} + {a} [ {c} ] ; {c} = {c} + 1 ; }} {return} {b} ; }}",
    )),
    Behaviour("product", "product of list", "multiply all elements of a list", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 1 ; {for} {c} {in} {a} {{ {b} = {b} * {c} ; }} {return} {b} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {c} = 0 ; {let} {b} = 1 ; {while} {c} < {len} ( {a} ) {{ {b} = {b} * {a} [ {c} ] ; {c} = {c} + 1 ; }} {return} {b} ; }}",
    )),
    Behaviour("max", "largest element", "find the largest element of a list", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = {a} [ 0 ] ; {for} {c} {in} {a} {{ {if} {c} > {b} {{ {b} = {c} ; }} }} {return} {b} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = {a} [ 0 ] ; {for} {c} {in} {range} ( 1 , {len} ( {a} ) ) {{ {if} {a} [ {c} ] > {b} {{ {b} = {a} [ {c} ] ; }} }} {return} {b} ; }}",
    )),
    Behaviour("min", "smallest element", "find the smallest element of a list", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = {a} [ 0 ] ; {for} {c} {in} {a} {{ {if} {c} < {b} {{ {b} = {c} ; }} }} {return} {b} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = {a} [ 0 ] ; {for} {c} {in} {a} {{ {if} {not} ( {c} >= {b} ) {{ {b} = {c} ; }} }} {return} {b} ; }}",
    )),
    Behaviour("count_positive", "count positive numbers", "count how many numbers in a list are positive", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 0 ; {for} {c} {in} {a} {{ {if} {c} > 0 {{ {b} = {b} + 1 ; }} }} {return} {b} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 0 ; {let} {c} = 0 ; {while} {c} < {len} ( {a} ) {{ {if} {a} [ {c} ] > 0 {{ {b} = {b} + 1 ; }} {c} = {c} + 1 ; }} {return} {b} ; }}",
    )),
    Behaviour("factorial", "factorial of number", "compute the factorial of a number", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 1 ; {while} {a} > 1 {{ {b} = {b} * {a} ; {a} = {a} - 1 ; }} {return} {b} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 1 ; {for} {c} {in} {range} ( 1 , {a} + 1 ) {{ {b} = {b} * {c} ; }} {return} {b} ; }}",
    )),
    Behaviour("is_even", "check even number", "check whether a number is even", (
        "{func} {f} ( {a} ) {{ {pad} {return} {a} % 2 == 0 ; }}",
        "{func} {f} ( {a} ) {{ {pad} {if} {a} % 2 == 0 {{ {return} {true} ; }} {else} {{ {return} {false} ; }} }}",
    )),
    Behaviour("abs", "absolute value", "return the absolute value of a number", (
        "{func} {f} ( {a} ) {{ {pad} {if} {a} < 0 {{ {return} 0 - {a} ; }} {return} {a} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {if} {a} >= 0 {{ {return} {a} ; }} {else} {{ {return} - {a} ; }} }}",
    )),
    Behaviour("reverse", "reverse list", "reverse the order of a list", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = [ ] ; {for} {c} {in} {a} {{ {b} = [ {c} ] + {b} ; }} {return} {b} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = [ ] ; {let} {c} = {len} ( {a} ) - 1 ; {while} {c} >= 0 {{ {b} = {b} + [ {a} [ {c} ] ] ; {c} = {c} - 1 ; }} {return} {b} ; }}",
    )),
    Behaviour("contains", "check list membership", "check whether a list contains a value", (
        "{func} {f} ( {a} , {d} ) {{ {pad} {for} {c} {in} {a} {{ {if} {c} == {d} {{ {return} {true} ; }} }} {return} {false} ; }}",
        "{func} {f} ( {a} , {d} ) {{ {pad} {let} {b} = {false} ; {for} {c} {in} {a} {{ {b} = {b} {and} {true} ; {if} {c} == {d} {{ {b} = {true} ; }} }} {return} {b} ; }}",
    )),
    Behaviour("square", "square of number", "multiply a number by itself", (
        "{func} {f} ( {a} ) {{ {pad} {return} {a} * {a} ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = {a} * {a} ; {return} {b} ; }}",
    )),
    Behaviour("average", "average of list", "compute the mean of a list", (
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 0 ; {for} {c} {in} {a} {{ {b} = {b} + {c} ; }} {return} {b} / {len} ( {a} ) ; }}",
        "{func} {f} ( {a} ) {{ {pad} {let} {b} = 0 ; {let} {c} = 0 ; {while} {c} < {len} ( {a} ) {{ {b} = {b} + {a} [ {c} ] ; {c} = {c} + 1 ; }} {return} {b} / {c} ; }}",
    )),
)


class DialectGenerator:
    """
    Seeded program generator for one dialect.

    Args:
        dialect: ``toya`` or ``toyb``.
        seed: RNG seed.
        filler: Inclusive (low, high) number of filler statements per program.
        comment_rate: Probability of adding a comment after each filler statement.
    """

    def __init__(self, dialect: str, seed: int = 0, filler: Tuple[int, int] = (0, 0),
                 comment_rate: float = 0.0):
        if dialect not in DIALECTS:
            raise ValueError(f"Unknown dialect {dialect!r}; expected one of {sorted(DIALECTS)}")
        self.dialect = dialect
        self.keywords = DIALECTS[dialect]
        self.rng = np.random.default_rng(seed)
        self.filler = filler
        self.comment_rate = comment_rate

    def _choice(self, options: Sequence[str]) -> str:
        return options[int(self.rng.integers(len(options)))]

    def _names(self, count: int) -> List[str]:
        picked = self.rng.choice(len(IDENTIFIERS), size=count, replace=False)
        return [IDENTIFIERS[int(i)] for i in picked]

    def _filler(self) -> str:
        low, high = self.filler
        count = int(self.rng.integers(low, high + 1)) if high > 0 else 0
        statements = []
        for k in range(count):
            name = f"tmp{k}"
            value = int(self.rng.integers(0, 100))
            if self.rng.random() < 0.5:
                statements.append(f"{self.keywords['let']} {name} = {value} ;")
            else:
                statements.append(f"{self.keywords['print']} ( {value} ) ;")
            if self.rng.random() < self.comment_rate:
                statements.append(f"// note {value}\n")
        return " ".join(statements)

    def program(self, behaviour: Behaviour, variant: Optional[int] = None) -> str:
        if variant is None:
            variant = int(self.rng.integers(len(behaviour.variants)))
        a, b, c, d = self._names(4)
        fields = dict(self.keywords)
        fields.update(f=self._choice(FUNCTION_NAMES), a=a, b=b, c=c, d=d,
                      pad=self._filler())
        text = behaviour.variants[variant].format(**fields)
        return " ".join(part for part in text.split(" ") if part)

    def behaviour(self) -> Behaviour:
        return BEHAVIOURS[int(self.rng.integers(len(BEHAVIOURS)))]


def clone_records(dialect: str, n: int, seed: int = 0, filler: Tuple[int, int] = (0, 0),
                  comment_rate: float = 0.0, positives_only: bool = False) -> List[RawRecord]:
    """
    ``n`` clone-detection pairs: half clones (same behaviour, independent
    variant and names), half non-clones (different behaviours).
    """
    gen = DialectGenerator(dialect, seed, filler, comment_rate)
    records = []
    for k in range(n):
        positive = positives_only or k % 2 == 0
        first = gen.behaviour()
        second = first
        while not positive and second is first:
            second = gen.behaviour()
        records.append(RawRecord(
            task="cd", lang=dialect, id=f"{dialect}-cd-{seed}-{k}",
            x1=gen.program(first), x2=gen.program(second), label=int(positive),
        ))
    return records


def summary_records(dialect: str, n: int, seed: int = 0) -> List[RawRecord]:
    """Code -> summary pairs (CM)"""
    gen = DialectGenerator(dialect, seed)
    records = []
    for k in range(n):
        behaviour = gen.behaviour()
        records.append(RawRecord(task="cm", lang=dialect, id=f"{dialect}-cm-{seed}-{k}",
                                 source=gen.program(behaviour), target=behaviour.summary))
    return records


def generation_records(dialect: str, n: int, seed: int = 0, canonical: bool = True) -> List[RawRecord]:
    """
    Description -> code pairs (CG) with the target dialect as ``lang``.

    With ``canonical`` the target uses variant 0 and fixed names, so the mapping
    is a function of (description, dialect).
    """
    gen = DialectGenerator(dialect, seed)
    records = []
    for k in range(n):
        behaviour = BEHAVIOURS[k % len(BEHAVIOURS)] if canonical else gen.behaviour()
        if canonical:
            fields = dict(DIALECTS[dialect])
            fields.update(f="f", a="x", b="acc", c="item", d="v", pad="")
            target = " ".join(behaviour.variants[0].format(**fields).split())
        else:
            target = gen.program(behaviour)
        records.append(RawRecord(task="cg", lang=dialect, id=f"{dialect}-cg-{seed}-{k}",
                                 source=behaviour.description, target=target))
    return records


def unlabeled_corpus(dialects: Sequence[str], n_per_dialect: int, seed: int = 0) -> List[Tuple[str, str]]:
    """(code, language) items for continual MLM pre-training"""
    corpus = []
    for offset, dialect in enumerate(dialects):
        gen = DialectGenerator(dialect, seed + 1000 * offset)
        corpus += [(gen.program(gen.behaviour()), dialect) for _ in range(n_per_dialect)]
    return corpus
