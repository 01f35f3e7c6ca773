"""Symbolic and numeric toolkit for positive quantum-group representations.

Subpackages:

* ``rootdata``  -- Cartan matrices, reduced words, positive roots.
* ``weylalg``   -- exact algebra of Weyl-ordered exponential operators.
* ``posrep``    -- positive representations and their relation checks.
* ``lusztig``   -- braid-group action, root vectors, Casimir machinery.
* ``qdilog``    -- numeric quantum dilogarithm engine.
* ``rmatrix``   -- R-operator factorization and its verified rewrite chains.
* ``cli``       -- command-line front end and JSON reports.
"""

__version__ = "0.1.0"
