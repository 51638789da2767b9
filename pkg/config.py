import os

class Config:
    # Numerics
    FD_STEP = 1e-6  # Central finite-difference step for Jacobian checks
    HESSIAN_FD_STEP = 1e-5  # Step for extended-Hessian differences of analytic gradients
    JACOBIAN_RTOL = 1e-5
    OVERFLOW_THRESHOLD = 1e12  # Any |entry| above this aborts a trial

    # Approximations (NoBackTrack / UORO)
    UNBIASED_TOL = 1e-10
    ENUMERATION_BUDGET = 2 ** 20  # Max sign sequences enumerated by verify_unbiased
    GAUGE_RTOL = 1e-12

    # Update rules
    RMSPROP_EPSILON = 1e-8
    POSITIVE_STABLE_TOL = 1e-10
    LYAPUNOV_RESIDUAL_TOL = 1e-8

    # Schedules
    ERGODIC_CHECKPOINTS = 20
    ERGODIC_FLAG_THRESHOLD = 0.95  # a_hat above this means the values were not centered

    # Diagnostics
    K_MAX = 50
    CONVERGENCE_TOL = 1e-2
    CONVERGENCE_WINDOW = 100
    OPTIMUM_RATE_THRESHOLD = 0.9  # Averages must shrink at least like T^(a-1) with a below this

    # File Paths
    BASE_DIR = os.path.dirname(os.path.abspath(__file__))
    CONFIG_DIR = os.path.join(BASE_DIR, 'configs')
    OUTPUT_ROOT = os.environ.get('RTRL_OUTPUT_ROOT', os.path.join(BASE_DIR, 'results'))
    LOG_DIR = os.path.join(OUTPUT_ROOT, 'logs')

    # Logging
    LOG_LEVEL = 'INFO'
    LOGGER_NAME = 'rtrl_lab'

    @classmethod
    def create_directories(cls):
        os.makedirs(cls.OUTPUT_ROOT, exist_ok=True)
        os.makedirs(cls.LOG_DIR, exist_ok=True)
