"""Phonon-sideband, intersystem-crossing and orbital-mixing rates for
NV-like color centers.

Submodules:

- ``units``     conversion constants, meV-based internal unit system
- ``gridfn``    sampled functions on uniform energy grids
- ``psb``       one-phonon spectra, multi-phonon sideband construction
- ``rates``     crossing rates from the excited triplet, lifetimes
- ``mixing``    phonon-mediated orbital mixing rates
- ``inference`` level-spacing / cutoff inference, thermal-model fits
- ``cli``       command-line entry point (``nvisc``)
"""

__version__ = "0.1.0"
