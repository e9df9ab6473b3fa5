"""Physical constants and apparatus defaults, collected in one place.

Frequencies in Hz, powers in W, lengths in m, temperatures in degrees
Celsius unless a name says otherwise.
"""

# Boltzmann constant, J/K (exact, 2019 SI).
K_BOLTZMANN = 1.380649e-23

# Cs ground-state hyperfine splitting, Hz (exact by the SI second definition).
CS_GROUND_SPLITTING_HZ = 9.192631770e9

# Vapor cell and beam geometry.
CELL_LENGTH_M = 0.025
CELL_TEMPERATURE_C = 112.0
CROSSING_ANGLE_RAD = 6e-3
PUMP_WAIST_M = 560e-6
PROBE_WAIST_M = 300e-6

# Default optical operating point.
PUMP_POWER_W = 0.6
DELTA_ONE_HZ = 1.6e9      # one-photon detuning, blue of F=3 -> F'=4
DELTA_TWO_HZ = 0.0        # two-photon detuning

# Seed probe power. Not an apparatus constant; chosen inside the
# bright-seed regime where linearized photostatistics hold.
SEED_POWER_W = 200e-6

# Transmission budget (power transmissivities).
WINDOW_TRANSMISSION = 0.98        # per cell face, AR coated at 895 nm
POLARIZER_TRANSMISSION = 0.98     # pump-filtering polarizer, passed beam
DETECTOR_QE = 0.98

# Balanced photodetector.
TRANSIMPEDANCE_V_PER_A = 1e5
ELECTRONIC_FLOOR_DB_BELOW_SNL = 10.0

# Spectrum analyzer settings.
RBW_HZ = 30e3
VBW_HZ = 300.0

# Probe-generation defaults.
BEAT_FWHM_FREE_HZ = 5e6       # two free-running lasers
BEAT_FWHM_LOCKED_HZ = 1.0     # PLL or EOM sideband
PLL_REF_A_HZ = 9.18e9
PLL_REF_B_HZ = 20e6
PLL_EXCESS_BAND_HZ = (0.72e6, 4.0e6)
PLL_EXCESS_NOISE_DB = 6.0
EOM_MOD_FREQ_HZ = 9.2e9
EOM_RF_POWER_DBM = 34.0
EOM_SIDEBAND_FRACS = (0.10, 0.10, 0.80)   # (-1st, +1st, carrier)
ETALON_FINESSE = 60.0
ETALON_CHAIN_TRANSMISSIVITY = 0.80
