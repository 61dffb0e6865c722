import math
from typing import Final

__version__ = '0.1.0'
__package__ = 'ksblow'

# Exponent of the dissipation in the energy-dissipation inequality
THETA: Final = 8 / 9

# Decay exponent of the pointwise bound v(x) <= B |x|^-KAPPA
KAPPA: Final = 2

# Lower integration limit of G; ln(S0) = 1
S0: Final = math.e
