use crate::error::{Error, Result};
use crate::symbols::{parse_symbol, Chart, PolySymbol};

/// Hamiltonian and Lindblad operators given by their Weyl symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    pub num_modes: usize,
    pub hbar: f64,
    pub hamiltonian: PolySymbol,
    pub lindblads: Vec<PolySymbol>,
}

impl LindbladModel {
    pub fn new(hbar: f64, hamiltonian: PolySymbol, lindblads: Vec<PolySymbol>) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        let chart = hamiltonian.chart();
        let n = hamiltonian.num_modes();
        if chart == Chart::DoubledXY {
            return Err(Error::UnsupportedChart {
                chart,
                op: "LindbladModel",
            });
        }
        for l in &lindblads {
            if l.chart() != chart {
                return Err(Error::ChartMismatch(chart, l.chart()));
            }
            if l.num_modes() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: l.num_modes(),
                });
            }
        }
        Ok(LindbladModel {
            num_modes: n,
            hbar,
            hamiltonian,
            lindblads,
        })
    }

    /// Builds a model from symbols in the textual notation.
    pub fn parse(chart: Chart, num_modes: usize, hbar: f64, hamiltonian: &str, lindblads: &[&str]) -> Result<Self> {
        let h = parse_symbol(hamiltonian, chart, num_modes)?;
        let ls = lindblads
            .iter()
            .map(|s| parse_symbol(s, chart, num_modes))
            .collect::<Result<Vec<_>>>()?;
        Self::new(hbar, h, ls)
    }

    pub fn chart(&self) -> Chart {
        self.hamiltonian.chart()
    }

    /// Phase-space dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.num_modes
    }

    /// The same model expressed in another chart.
    pub fn to_chart(&self, target: Chart) -> Result<Self> {
        Ok(LindbladModel {
            num_modes: self.num_modes,
            hbar: self.hbar,
            hamiltonian: self.hamiltonian.chart_transform(target)?.pruned(1e-15),
            lindblads: self
                .lindblads
                .iter()
                .map(|l| l.chart_transform(target).map(|s| s.pruned(1e-15)))
                .collect::<Result<_>>()?,
        })
    }

    pub(crate) fn require_chart(&self, chart: Chart, op: &'static str) -> Result<()> {
        if self.chart() != chart {
            return Err(Error::UnsupportedChart {
                chart: self.chart(),
                op,
            });
        }
        Ok(())
    }
}
