"""Simulator and multi-pass decoder for transversal-CNOT logical circuits."""

from .builders import (InjectedError, LogicalCircuit, LogicalCircuitSpec,
                       build_logical_circuit, build_repetition_memory,
                       build_surface_memory, direction_vector_layers)
from .circuit import Circuit, CircuitError, Instruction
from .dem import (BOUNDARY, DIAGONAL, SPATIAL, TEMPORAL, Edge, ExtractionError,
                  FaultSignature, MatchingGraph, decompose_edge, extract_dem)
from .experiments import (ExperimentConfig, LerEstimate, LerRow, estimate_ci,
                          run_experiment)
from .iterative import (EITHER, FRAMES_FIXED, NO_TOGGLES, IterationConfig,
                        IterativeResult, decode_shot, error_to_det,
                        iterative_decode, predict_observables,
                        spatial_frame_from_matching)
from .layout import PatchLayout, repetition_layout, surface_layout
from .mwpm import Matching, all_pairs_distances, brute_force_decode, decode
from .pauli import (Pauli, PauliFrame, conjugate_through_cnot,
                    conjugate_through_h, frame_xor)
from .sampler import (ShotResult, dump_detection_events, load_detection_events,
                      sample, sample_arrays)

__version__ = "0.1.0"
