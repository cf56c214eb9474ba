"""Global counting on a double well.

Two minima and a barrier top.  Running the full analysis from a config file
gives the local verdicts at every point and the global sums: the signs s,
which points land in S+ and S-, and the weighted count E.
"""

from pathlib import Path

from hambif import analyze, load_problem

config = Path(__file__).parent / "configs" / "double_well.toml"
report = analyze(load_problem(config))
print(report.to_text())

g = report.global_result
print(f"S+ = {list(g.s_plus)}, S- = {list(g.s_minus)}, E = {g.E}")
