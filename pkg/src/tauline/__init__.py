"""Milestone-based survival contrasts for trials with nonproportional hazards."""

from .data import (ArmView, CsvSchema, Subject, SurvivalDataset, load_csv,
                   read_csv_text, split_by_arm, write_csv)
from .errors import *  # noqa: F401,F403
from .inference import (CurveBand, Estimand, InferenceResult, bootstrap,
                        bootstrap_curve)
from .km import KmCurve, at_risk, fit_km, maturity_check
from .milestone import (classify_milestone, milestone_contrast, milestone_survival,
                        milestone_sweep, summarize_milestone, susceptible_survival)
from .phdiag import fit_cox_two_group, schoenfeld_ph_test
from .reconstruct import (DigitizedCurve, PseudoIpd, digitize_km, reconstruct_arm,
                          validate_reconstruction)
from .rmst import drmst_process, rmst, susceptible_drmst
from .scenarios import Scenario, pairwise_tau_oracle, simulate, truth
from .stepfn import StepFunction, SurvivalCurve, integrate, stieltjes_sum
from .tau import (TauCurve, TurningPoint, pairwise_tau, susceptible_tau, tau_process,
                  tau_slope, turning_time)

__version__ = "0.1.0"
