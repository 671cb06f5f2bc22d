"""Closed forms that disagree with the flow-matrix recomputation.

Each line compares a printed closed form with the value derived from the
exact flow and independent moment formulas.
"""

from starflow.discrepancies import all_discrepancies

for flag in all_discrepancies():
    print(flag.line())
