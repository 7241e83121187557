"""Finite element solver for two-phase magnetohydrodynamic flow.

The package couples a Cahn-Hilliard phase-field equation, the
incompressible Navier-Stokes equations, and the magnetic induction
equation on the unit square, discretized with inf-sup stable mixed
elements and stepped in time by an unconditionally energy-stable
convex-splitting method.
"""

__version__ = "0.1.0"
