"""Laboratory for 2-D exterior Helmholtz scattering by trapping obstacles.

Pieces: self-contained order-0/1 special functions, obstacle geometries with
radial-cutoff classification, multiplier vector fields with fully explicit
constants, panel Nystrom discretizations of the combined-field boundary
operators, singular-value sweeps in the wavenumber, trapped-mode quasimode
probes, and sound-soft scattering solves.
"""

__version__ = "0.1.0"
