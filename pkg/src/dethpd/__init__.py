"""HPD credible sets from Monte Carlo samples via D*-partition density trees."""

__version__ = "0.1.0"

from .kernels import BACKEND
from .samples import DataError, HyperRect, SampleMatrix, TruncationReport, affine_from_unit, affine_to_unit, \
    estimate_truncation, load_samples, split_train_test, write_samples
from .discrepancy import DiscrepancyEstimate, GapTable, gap_table, max_gap, star_discrepancy
from .tree import DetConfig, LeafCell, PartitionTree, build_det, density_eval, mass_on_rect, \
    partition_equivalence_check
from .hpd import CoverageReport, HpdSet, coverage_estimate, estimate_hpd
from .loss import LossReport, TemperedDiagnostic, gamma_hat, loss_estimate, tempered_diagnostic
from .bandwidth import BandwidthSearchConfig, BandwidthTrace, coverage_test, select_bandwidth_intractable, \
    select_bandwidth_tractable
from .baselines import ProductSet, bghm_set, sr_set
from .calibration import CalibrationDataset, CalibrationModel, build_calibration_dataset, calibrate_at, \
    fit_logistic
from .oracles import AnalyticGaussianHpd, brute_discrepancy_1d, exact_loss_between, gaussian_hpd_contains
