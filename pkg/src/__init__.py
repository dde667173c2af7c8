"""PencilProny: GSVD matrix-pencil estimation of monomial-exponential sums."""

__version__ = "0.1.0"
