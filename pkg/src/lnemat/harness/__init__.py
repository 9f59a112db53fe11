"""Randomized verification campaigns, reports and the command-line interface."""

from .campaigns import (
    CAMPAIGNS,
    run_angle,
    run_arrangement,
    run_campaign,
    run_classify,
    run_cusp,
    run_oracle_compare,
    run_path,
    run_transversal,
    run_verify_closure,
    run_verify_stratum,
)
from .report import CampaignConfig, ExperimentReport, trial_rng

__all__ = [
    "CAMPAIGNS", "CampaignConfig", "ExperimentReport", "run_angle", "run_arrangement",
    "run_campaign", "run_classify", "run_cusp", "run_oracle_compare", "run_path",
    "run_transversal", "run_verify_closure", "run_verify_stratum", "trial_rng",
]
