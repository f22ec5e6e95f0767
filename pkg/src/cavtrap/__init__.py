"""cavtrap: quasiclassical dynamics of single atoms trapped by single-photon
cavity fields.

The package solves the fixed-position driven atom-cavity master equation for
the force, momentum-diffusion and friction coefficients of the quasiclassical
motional model, tabulates them over the coupling strength, integrates
stochastic atom trajectories with an experiment-faithful trigger/detection
loop, and post-processes ensembles into transit-duration histograms,
oscillation period-amplitude data and windowed-FFT spectrograms for the two
single-photon trapping experiments it models.
"""

__version__ = "0.1.0"

from .quantum import (CouplingPointData, DensityState, EvolutionGenerator,
                      RecoilTensor, SystemParams, ValidityReport,
                      build_generator, dressed_energies, mode_function,
                      integrated_symmetric_correlation,
                      integrated_weighted_commutator, recoil_tensor,
                      static_expectations, steady_state, validity_report)
from .tables import (CoefficientTable, PotentialProfile, build_table,
                     drive_for_target, effective_potential, heating_rate,
                     lookup, small_amplitude_frequency)
from .free_space import (FreeSpaceParams, build_free_space_profiles,
                         build_free_space_table, calibrate_rabi_peak,
                         free_space_point_data)
from .trajectory import (InitialConditionModel, IntegratorConfig,
                         TrajectoryRecord, TransitSetup, TriggerConfig,
                         DetectionMonitor, detection_update, run_ensemble,
                         run_transit, sample_initial, step)
from .analysis import (ModulationEvent, Spectrogram, TransitSignal,
                       angular_momentum_series, bandwidth_process,
                       duration_histogram, extract_modulations,
                       period_amplitude_theory, spectrogram, transit_duration)
from .config import RunConfig, resolve_config
