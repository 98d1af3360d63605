//! Deterministic 2D diagrams of a model state.
//!
//! Blocks are filled with their discipline colour, disconnected connections
//! are dashed, and the connections a step removes or establishes are drawn
//! bold with a `remove`/`establish` label. The step's target block gets a
//! 3px outline. Output bytes depend only on the input values.

mod dot;
mod svg;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Discipline, ModelState, PlantModel};
use crate::procedure::{Annotation, HighlightKind};
use crate::scalar::Scalar;

pub use dot::render_dot;
pub use svg::{render_svg, CELL_HEIGHT, CELL_WIDTH};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette(pub BTreeMap<Discipline, String>);

impl Default for Palette {
    fn default() -> Self {
        Palette(BTreeMap::from([
            (Discipline::MechatronicModule, "#FFD700".to_owned()),
            (Discipline::ElectricElectronic, "#1E90FF".to_owned()),
            (Discipline::Software, "#DC143C".to_owned()),
            (Discipline::Mechanical, "#2E8B57".to_owned()),
        ]))
    }
}

impl Palette {
    pub fn color(&self, discipline: Discipline) -> &str {
        self.0.get(&discipline).map_or("#FFFFFF", String::as_str)
    }
}

pub struct RenderSpec<'a, S: Scalar = f64> {
    pub model: &'a PlantModel<S>,
    pub state: &'a ModelState<S>,
    pub annotation: Option<&'a Annotation<S>>,
    pub palette: Palette,
}

impl<'a, S: Scalar> RenderSpec<'a, S> {
    pub fn new(model: &'a PlantModel<S>, state: &'a ModelState<S>) -> Self {
        RenderSpec {
            model,
            state,
            annotation: None,
            palette: Palette::default(),
        }
    }

    pub fn with_annotation(mut self, annotation: &'a Annotation<S>) -> Self {
        self.annotation = Some(annotation);
        self
    }

    fn check(&self) -> Result<(), RenderError> {
        if self.state.is_valid_for(self.model) {
            Ok(())
        } else {
            Err(RenderError::InvalidState)
        }
    }

    fn highlight(&self, connection: &str) -> Option<HighlightKind> {
        self.annotation?
            .highlights
            .iter()
            .find(|(c, _)| c == connection)
            .map(|(_, k)| *k)
    }

    fn is_target(&self, block: &str) -> bool {
        self.annotation.is_some_and(|a| a.target == block)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("state does not match the model")]
    InvalidState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Dot,
    Svg,
}

pub fn render<S: Scalar>(spec: &RenderSpec<'_, S>, format: Format) -> Result<String, RenderError> {
    match format {
        Format::Dot => render_dot(spec),
        Format::Svg => render_svg(spec),
    }
}

/// Child block ids of every block, sorted.
fn children<S: Scalar>(model: &PlantModel<S>) -> BTreeMap<&str, Vec<&str>> {
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for b in &model.blocks {
        if let Some(p) = &b.parent {
            out.entry(p.as_str()).or_default().push(b.id.as_str());
        }
    }
    for list in out.values_mut() {
        list.sort_unstable();
    }
    out
}
