//! Localizable entanglement of multi-qubit pure states under sequential
//! unsharp measurements on the assisting qubits.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod branches;
pub mod entanglement;
pub mod error;
pub mod localize;
pub mod optim;
pub mod povm;
pub mod qcore;
pub mod states;

pub use branches::{average_entanglement, dedup, measure_round, Branch, Ensemble, Target};
pub use entanglement::{bell_fidelity, entanglement_functional, ggm, negativity, Measure};
pub use error::{Error, Result};
pub use localize::{
    delta_series, global_le, ops_enumerate, pattern_oracle, projective_le, rounds_to_threshold,
    sequential_le, sequential_le_with, single_round_le, DeltaRecord, RoundKernel, RoundRecord,
    SearchKind, SearchSpace, SleOptions,
};
pub use povm::{
    kraus_operator, povm_element, validate_plan, Direction, KrausOperator, MeasurementMatrix,
    MeasurementPlan, Outcome, OutcomeMatrix, UnsharpnessMatrix,
};
pub use qcore::{Bipartition, DensityMatrix2Q, PureState, C64};
pub use states::{sample_haar, HaarFamily, HaarSampler, StateFamily};
