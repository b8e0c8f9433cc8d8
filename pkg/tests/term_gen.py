"""Seeded random generator of SMT-LIB terms covering every variant.

Used by the round-trip acceptance criterion: 1000 terms at depth <= 8 must
survive print-then-parse with structural equality.
"""

import random

from ipm.sexpr import (
    Annotated, App, Attr, BoolLit, IntLit, Let, Quantifier, QuotedSymbol,
    StringLit, Symbol,
)

_SIMPLE_NAMES = ["x", "y", "foo", "Mul", "Mod", "ControlFlow", "$IsGoodHeap",
                 "o@@5", "Set.in?", "a+b", "~neg", "_under"]
_QUOTED_NAMES = ["x#0@@1", "x#1@@1", "Seq#Build", "Seq#Empty", "char#FromInt",
                 "filebpl.796:15", "some name", "a|b".replace("|", "!")]
_SORTS = ["Int", "Bool", "T@U", "T@Box"]
_STRINGS = ["", "x", 'say ""hi""'.replace('""', '"'), "x + y > 0", "line\nfeed"]


def gen_term(rng: random.Random, depth: int):
    if depth <= 0:
        return _gen_atom(rng)
    kind = rng.randrange(10)
    if kind <= 3:
        return _gen_atom(rng)
    if kind <= 6:
        head = _gen_symbol(rng)
        args = tuple(gen_term(rng, depth - 1) for _ in range(rng.randint(1, 3)))
        return App(head, args)
    if kind == 7:
        bindings = tuple((_gen_symbol(rng), Symbol(rng.choice(_SORTS)))
                         for _ in range(rng.randint(1, 2)))
        attrs = _gen_attrs(rng, depth - 1) if rng.random() < 0.5 else ()
        return Quantifier(rng.choice(["forall", "exists"]), bindings,
                          gen_term(rng, depth - 1), attrs)
    if kind == 8:
        bindings = tuple((_gen_symbol(rng), gen_term(rng, depth - 1))
                         for _ in range(rng.randint(1, 2)))
        return Let(bindings, gen_term(rng, depth - 1))
    return Annotated(gen_term(rng, depth - 1), _gen_attrs(rng, depth - 1) or (Attr(":qid"),))


def _gen_attrs(rng: random.Random, depth: int):
    out = []
    for _ in range(rng.randint(1, 2)):
        roll = rng.random()
        if roll < 0.3:
            out.append(Attr(":qid", QuotedSymbol(rng.choice(_QUOTED_NAMES))))
        elif roll < 0.6:
            out.append(Attr(":pattern", tuple(gen_term(rng, max(0, depth - 1))
                                              for _ in range(rng.randint(1, 2)))))
        elif roll < 0.8:
            out.append(Attr(":skolemid", IntLit(rng.randrange(1000))))
        else:
            out.append(Attr(":named"))
    return tuple(out)


def _gen_symbol(rng: random.Random):
    if rng.random() < 0.5:
        return Symbol(rng.choice(_SIMPLE_NAMES))
    return QuotedSymbol(rng.choice(_QUOTED_NAMES))


def _gen_atom(rng: random.Random):
    roll = rng.randrange(6)
    if roll == 0:
        return IntLit(rng.choice([0, 1, 2, -1, -5, 10**25, -(10**21), 42]))
    if roll == 1:
        return BoolLit(rng.random() < 0.5)
    if roll == 2:
        return StringLit(rng.choice(_STRINGS))
    return _gen_symbol(rng)
