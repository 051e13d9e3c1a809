//! Data behind the graphical tools (time-series plot, rate evolution,
//! pattern histograms, IFS circle transformation, serial dependence plots,
//! control charts) and their SVG rendering.

pub mod charts;
pub mod ifs;
pub mod patterns;
pub mod svg;

pub use charts::{
    combined_cycle_chart, cycle_length_chart, dependence_plot_data, ewma_estimates, ewma_marginal_chart,
    ChartKind, ChartLine, ControlChart, CycleChart, DependencePlot, EwmaChart,
};
pub use ifs::{circle_point, ifs_circle_transform, FractalSeries, Window};
pub use patterns::{cycle_lengths, rate_evolution, CycleRecord, PatternHistogram, RateEvolution};
pub use svg::{render_svg, PlotData, StyleOptions};
