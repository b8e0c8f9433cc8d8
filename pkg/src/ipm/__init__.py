"""Interactive proof mode for SMT-based program verification.

Pipeline: instrument a Dafny-subset source, feed it through Dafny/Boogie to
SMT-LIB, split the script into prelude and verification conditions,
back-translate the obligation marked for interaction into readable formulas,
let the user discharge it with tactics against a live solver, and reconstruct
a source-level proof from the tactic tree.
"""

__version__ = "0.1.0"
