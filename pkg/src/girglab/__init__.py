"""girglab: majority-vote opinion dynamics on geometric inhomogeneous random graphs.

Subpackages
-----------
girg        exact zero-temperature GIRG sampling and degree calibration
dynamics    sequential majority-vote process with shaped initializations
meanfield   discretized interface profiles and the mean-field update operator
theory      subsolution construction, validity checks, and erosion bounds
experiments survival-probability sweeps and logistic transition fits
cli         the ``girg-lab`` command line front end
"""

__version__ = "0.1.0"
