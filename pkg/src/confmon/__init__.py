"""Conformance-based control-flow anomaly detection.

Aligns event logs against labeled accepting Petri nets, distills alignment
diagnoses (per-activity misalignment counters plus fitness), injects
synthetic control-flow anomalies, and trains one-class detectors on the
diagnoses of normal behavior.
"""

from .alignment import (Alignment, CostScheme, Move, SKIP, UNKNOWN, coverage,
                        log_fitness, misalignments, optimal_alignment,
                        trace_fitness, worst_case_cost)
from .detect import (DETECTOR_KINDS, Detector, ae_gradient_check, classify,
                     default_ae_layers, load_detector, save_detector, score,
                     score_matrix, train)
from .diagnoses import (DiagnosesMatrix, DiagRow, build_diagnoses,
                        diagnosis_columns, read_diagnoses, write_diagnoses)
from .errors import (AlignmentError, ConfmonError, DetectError, InjectError,
                     LogError, MetricsError, ModelError, PlayoutError)
from .eventlog import (EventLog, LogStats, Trace, ingest_raw, parse_log,
                       split_log, stats, write_log, write_log_csv)
from .inject import (ANOMALY_TYPES, DEFAULT_UNKNOWN_POOL, InjectionSpec,
                     build_eval_sets, inject_log, inject_trace)
from .metrics import Confusion, PrfResult, RocCurve, confusion, prf, roc_auc
from .petri import (NoiseParams, PetriNet, SoundnessReport, bundled_model,
                    check_soundness, enabled, fire, is_workflow_net,
                    load_model, parse_model, playout)
from .cli import ExperimentConfig, main, parse_experiment_config, run_experiment

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
