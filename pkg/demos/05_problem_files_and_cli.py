"""
Problem files and the command line
==================================

Problems are stored as ``key = value`` lines with operators written as
s-expressions.  The same files drive ``ckscale bounds|verify|solve``.
"""

from pathlib import Path

from ckscale.cli import run_command
from ckscale.problemfile import load_problem, serialize_problem

here = Path(__file__).resolve().parent / "problems"

pf = load_problem(here / "burgers.ck")
print(serialize_problem(pf))

for mode, name in (("bounds", "burgers"), ("verify", "heat"), ("solve", "transport")):
    res = run_command(mode, here / f"{name}.ck")
    print(f"$ ckscale {mode} --problem {name}.ck   (exit {res.code})")
    print(res.text)
    if res.csv:
        print("\n".join(res.csv.splitlines()[:4]), "\n...")
