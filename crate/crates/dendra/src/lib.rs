//! Agglomerative hierarchical clustering with explicit handling of tied
//! proximities.
//!
//! The variable-group algorithm merges every group of mutually tied
//! clusters in a single step, producing a *multidendrogram* whose nodes
//! carry fusion intervals instead of bare heights; the result is invariant
//! under reordering of the input. The classical pair-group algorithm is
//! also provided, along with nine linkage methods (including the
//! parametric versatile and flexible families), descriptive measures,
//! merge-table / Newick / JSON serialization, and SVG rendering.

mod error;
mod prox;
mod linkage;
mod engine;
mod descriptors;
mod serialize;
mod svg;
mod diagnostics;

pub use descriptors::{cophenetic_matrix, descriptor_set, summary_text, DescriptorSet};
pub use diagnostics::{
    descriptor_sweep, enumerate_pair_dendrograms, permutation_study, Measure,
};
pub use svg::{render_dendrogram_svg, render_sweep_svg, Orientation, PlotOptions};
pub use serialize::{
    from_json, from_merge_table, parse_newick, to_json, to_merge_table, to_newick, MergeRow,
    MergeTable,
};
pub use engine::{cluster, naive_cluster, tie_components, tree_equal};
pub use engine::{ClusterNode, Dendrogram, GroupMode};
pub use error::{Error, Result};
pub use linkage::{
    generalized_mean, merge_proximity, MergeContext, Method, MethodSpec, Weighting,
};
pub use prox::{parse_proximity, Format, Kind, ProximityMatrix};
