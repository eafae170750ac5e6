"""Bundled example programs and generators for their scalable families.

The ``.pgcl`` files shipped with the package are fixed instances; each has
a ``.props`` sidecar with the bound properties checked by the benchmark
driver.  The ``make_*`` functions build other instances of the same
program families (more coupons, more protocol members) by generating
source text and parsing it, so generated and bundled programs go through
the same front end.
"""

from __future__ import annotations

from importlib import resources

from .. import lang
from ..lang.ast import Program
from ..lang.properties import Property, load_properties

__all__ = [
    "names",
    "source",
    "load",
    "properties",
    "make_coupon",
    "make_coupon_classic",
    "make_crowds",
]


def names() -> tuple[str, ...]:
    """Stems of the bundled programs, sorted."""
    found = []
    for entry in resources.files(__name__).iterdir():
        if entry.name.endswith(".pgcl"):
            found.append(entry.name[: -len(".pgcl")])
    return tuple(sorted(found))


def source(name: str) -> str:
    """Raw source text of a bundled program."""
    path = resources.files(__name__) / f"{name}.pgcl"
    if not path.is_file():
        raise KeyError(f"no bundled program named {name!r}; have {', '.join(names())}")
    return path.read_text()


def load(name: str) -> Program:
    """Parse a bundled program."""
    return lang.parse_program(source(name), name=name)


def properties(name: str) -> list[Property]:
    """Parse the bound properties of a bundled program (may be empty)."""
    program = load(name)
    path = resources.files(__name__) / f"{name}.props"
    if not path.is_file():
        return []
    return load_properties(path.read_text(), program)


def make_coupon(coupons: int, observe_distinct: bool = False) -> Program:
    """Coupon collector with three draws per round over `coupons` kinds.

    With ``observe_distinct`` every round is conditioned on its three
    draws being pairwise distinct.
    """
    if coupons < 2:
        raise ValueError("need at least two coupons")
    decls = [f"int coup{i} := 0;" for i in range(coupons)]
    decls += ["int draw1 := 0;", "int draw2 := 0;", "int draw3 := 0;", "int numberDraws := 0;"]
    guard = " | ".join(f"!(coup{i} = 1)" for i in range(coupons))
    body = [
        f"draw1 := unif(0, {coupons - 1});",
        f"draw2 := unif(0, {coupons - 1});",
        f"draw3 := unif(0, {coupons - 1});",
        "numberDraws := numberDraws + 1;",
    ]
    if observe_distinct:
        body.append("observe (draw1 != draw2 & draw1 != draw3 & draw2 != draw3);")
    body += [
        f"if (draw1 = {i} | draw2 = {i} | draw3 = {i}) {{ coup{i} := 1; }}"
        for i in range(coupons)
    ]
    text = "\n".join(decls) + f"\nwhile ({guard}) {{\n    " + "\n    ".join(body) + "\n}\n"
    stem = f"coupon_obs_{coupons}" if observe_distinct else f"coupon_{coupons}"
    return lang.parse_program(text, name=stem)


def make_coupon_classic(coupons: int) -> Program:
    """Coupon collector with a single draw per round."""
    if coupons < 2:
        raise ValueError("need at least two coupons")
    decls = [f"int coup{i} := 0;" for i in range(coupons)]
    decls += ["int draw := 0;", "int numberDraws := 0;"]
    guard = " | ".join(f"!(coup{i} = 1)" for i in range(coupons))
    body = [f"draw := unif(0, {coupons - 1});", "numberDraws := numberDraws + 1;"]
    body += [f"if (draw = {i}) {{ coup{i} := 1; }}" for i in range(coupons)]
    text = "\n".join(decls) + f"\nwhile ({guard}) {{\n    " + "\n    ".join(body) + "\n}\n"
    return lang.parse_program(text, name=f"coupon_classic_{coupons}")


def make_crowds(
    members: int,
    runs: int,
    observe_threshold: int | None = None,
    parametric: bool = False,
) -> Program:
    """Crowds-style protocol with `members` members over `runs` runs.

    ``observe_threshold`` conditions the program on more than that many
    interceptions pointing at members other than the true sender.  With
    ``parametric`` the interception and forwarding probabilities become
    the parameters ``b`` and ``f`` instead of 0.091 and 0.8.
    """
    if members < 2 or runs < 1:
        raise ValueError("need at least two members and one run")
    intercept = "b" if parametric else "0.091"
    forward = "f" if parametric else "0.8"
    text = f"""
int delivered := 0;
int lastSender := 0;
int remainingRuns := {runs};
int observeSender := 0;
int observeOther := 0;

while (remainingRuns > 0) {{
    while (delivered = 0) {{
        {{
            if (lastSender = 0) {{
                observeSender := observeSender + 1;
            }} else {{
                observeOther := observeOther + 1;
            }}
            lastSender := 0;
            delivered := 1;
        }} [{intercept}] {{
            {{
                {{ lastSender := 0; }} [1/{members}] {{ lastSender := 1; }}
            }}
            [{forward}]
            {{
                lastSender := 0;
                delivered := 1;
            }}
        }}
    }}
    delivered := 0;
    remainingRuns := remainingRuns - 1;
}}
"""
    if observe_threshold is not None:
        text += f"observe (observeOther > {observe_threshold});\n"
    pieces = ["crowds"]
    if parametric:
        pieces.append("parametric")
    if observe_threshold is not None:
        pieces.append("obs")
    pieces += [str(members), str(runs)]
    return lang.parse_program(text, name="_".join(pieces))
