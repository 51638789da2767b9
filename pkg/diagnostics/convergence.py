from dataclasses import dataclass
from typing import Optional
import numpy as np
from config import Config
from rtrl.records import TrialRecord
from utils.errors import ContractViolationError

STATUSES = ('converged', 'diverged', 'undecided')


@dataclass
class ConvergenceVerdict:
    status: str
    t: Optional[int] = None

    @property
    def converged(self) -> bool:
        return self.status == 'converged'


def convergence_detector(record: TrialRecord, theta_star=None, tol: float = None,
                         window: int = None) -> ConvergenceVerdict:
    """Converged at the first t >= window with |theta_s - theta*| <= tol for all s in [t - window, t].

    A recorded abort is a divergence at the abort time.
    """
    tol = Config.CONVERGENCE_TOL if tol is None else tol
    window = Config.CONVERGENCE_WINDOW if window is None else window
    if not record.t:
        raise ContractViolationError("convergence_detector needs a non-empty record")
    if record.is_aborted:
        return ConvergenceVerdict('diverged', record.abort_t)
    theta_star = record.theta_star if theta_star is None else theta_star
    if theta_star is None:
        raise ContractViolationError("convergence_detector needs theta* (none given or recorded)")

    dists = record.theta_dist(theta_star)
    t_first = record.t[0]
    last_bad = -np.inf
    for t, dist in zip(record.t, dists):
        if not dist <= tol:
            last_bad = t
            continue
        if t - t_first >= window and last_bad < t - window:
            return ConvergenceVerdict('converged', int(t))
    return ConvergenceVerdict('undecided')
