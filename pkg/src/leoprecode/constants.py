"""Physical constants (SI units)."""

SPEED_OF_LIGHT = 299792458.0        # m/s
EARTH_RADIUS = 6.371e6              # m (spherical Earth)
GRAVITATIONAL_CONSTANT = 6.674e-11  # m^3 kg^-1 s^-2
EARTH_MASS = 5.972e24               # kg
MU_EARTH = GRAVITATIONAL_CONSTANT * EARTH_MASS
EARTH_ROTATION_RATE = 7.2921159e-5  # rad/s (sidereal)
BOLTZMANN = 1.380649e-23            # J/K
