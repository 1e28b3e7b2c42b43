"""p-adaptive Hermite solver for Maxwell's equations in nonlinear dispersive media.

The package evolves cellwise Hermite interpolants of the electromagnetic
fields and their auxiliary polarization variables on dually staggered
periodic grids, in one and two space dimensions. The electric-field
coefficient rates are obtained by an order-recursive elimination, so no
nonlinear algebraic solver is ever invoked. Per-node derivative order m is
selected adaptively from a coefficient-magnitude cutoff.
"""

__version__ = "0.1.0"
