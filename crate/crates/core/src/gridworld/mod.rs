//! Marker-conditioned two-goal gridworlds with partial visibility.
//!
//! A [`WorldSpec`] fixes the layout; a [`TaskVariant`] picks which marker
//! colour is shown and which goal pays +1. The agent only sees cells inside
//! the clipped 5x5 visibility kernel, accumulated into a per-episode mask.

mod env;
mod parse;

pub use env::{visibility_footprint, Environment, Observation, StepResult, MAX_STEPS};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub type Rgb = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub r: usize,
    pub c: usize,
}

impl Cell {
    pub const fn new(r: usize, c: usize) -> Self {
        Cell { r, c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    /// Fixed order; also the greedy tie-break order.
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        }
    }
}

/// Deterministic move, clamped at the grid boundary.
pub fn next_cell(pos: Cell, action: Action, height: usize, width: usize) -> Cell {
    match action {
        Action::Up => Cell::new(pos.r.saturating_sub(1), pos.c),
        Action::Down => Cell::new((pos.r + 1).min(height - 1), pos.c),
        Action::Left => Cell::new(pos.r, pos.c.saturating_sub(1)),
        Action::Right => Cell::new(pos.r, (pos.c + 1).min(width - 1)),
    }
}

/// Semantic cell roles, in the order used to break nearest-colour ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Empty,
    Start,
    MarkerGreen,
    MarkerYellow,
    Success,
    Failure,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Empty,
        Role::Start,
        Role::MarkerGreen,
        Role::MarkerYellow,
        Role::Success,
        Role::Failure,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Role::Empty => "empty",
            Role::Start => "start",
            Role::MarkerGreen => "marker_green",
            Role::MarkerYellow => "marker_yellow",
            Role::Success => "success",
            Role::Failure => "failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Palette {
    colors: [Rgb; 6],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            colors: [
                [0.0, 0.0, 0.0],
                [1.0, 1.0, 1.0],
                [0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0],
            ],
        }
    }
}

impl Palette {
    pub fn color(&self, role: Role) -> Rgb {
        self.colors[role as usize]
    }

    pub fn set(&mut self, role: Role, rgb: Rgb) -> Result<()> {
        if rgb.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "palette colour for {} outside [0,1]: {rgb:?}",
                role.key()
            )));
        }
        self.colors[role as usize] = rgb;
        Ok(())
    }

    /// Nearest palette role by Euclidean RGB distance; exact ties go to the
    /// earlier role in [`Role::ALL`].
    pub fn classify(&self, rgb: Rgb) -> Role {
        let mut best = Role::Empty;
        let mut best_d = f64::INFINITY;
        for role in Role::ALL {
            let c = self.color(role);
            let d: f64 = (0..3).map(|i| (rgb[i] - c[i]).powi(2)).sum();
            if d < best_d {
                best_d = d;
                best = role;
            }
        }
        best
    }
}

/// Which of the two task variants is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskVariant {
    /// Green marker; goal 1 pays +1.
    A,
    /// Yellow marker; goal 2 pays +1.
    B,
}

impl TaskVariant {
    pub const ALL: [TaskVariant; 2] = [TaskVariant::A, TaskVariant::B];

    pub fn marker_role(self) -> Role {
        match self {
            TaskVariant::A => Role::MarkerGreen,
            TaskVariant::B => Role::MarkerYellow,
        }
    }

    /// Index (0 or 1) of the goal cell that pays +1.
    pub fn success_goal(self) -> usize {
        match self {
            TaskVariant::A => 0,
            TaskVariant::B => 1,
        }
    }

    pub fn failure_goal(self) -> usize {
        1 - self.success_goal()
    }

    pub fn label(self) -> &'static str {
        match self {
            TaskVariant::A => "A",
            TaskVariant::B => "B",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            TaskVariant::A
        } else {
            TaskVariant::B
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub name: String,
    pub height: usize,
    pub width: usize,
    pub start: Cell,
    pub marker: Cell,
    pub goals: [Cell; 2],
    pub palette: Palette,
}

const BW_E: &str = include_str!("../../worlds/bw-e.txt");
const BW_H: &str = include_str!("../../worlds/bw-h.txt");

impl WorldSpec {
    pub fn new(
        name: impl Into<String>,
        height: usize,
        width: usize,
        start: Cell,
        marker: Cell,
        goals: [Cell; 2],
        palette: Palette,
    ) -> Result<Self> {
        let spec = WorldSpec {
            name: name.into(),
            height,
            width,
            start,
            marker,
            goals,
            palette,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::invalid("world must have at least one cell"));
        }
        let cells = [self.start, self.marker, self.goals[0], self.goals[1]];
        for (i, a) in cells.iter().enumerate() {
            if a.r >= self.height || a.c >= self.width {
                return Err(Error::invalid(format!("cell {a:?} out of bounds")));
            }
            if cells[..i].contains(a) {
                return Err(Error::invalid(format!(
                    "start, marker and goals must be distinct; {a:?} repeats"
                )));
            }
        }
        Ok(())
    }

    /// Built-in layouts: `bw-e` and `bw-h`.
    pub fn builtin(name: &str) -> Option<WorldSpec> {
        let text = match name {
            "bw-e" => BW_E,
            "bw-h" => BW_H,
            _ => return None,
        };
        Some(Self::parse(text).expect("built-in world parses"))
    }

    /// Built-in name or path to a world file.
    pub fn load(name_or_path: &str) -> Result<WorldSpec> {
        if let Some(w) = Self::builtin(name_or_path) {
            return Ok(w);
        }
        let text = std::fs::read_to_string(name_or_path)
            .map_err(|e| Error::io(name_or_path, e))?;
        Self::parse(&text)
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.r * self.width + cell.c
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.r < self.height && cell.c < self.width
    }

    pub fn role_at(&self, cell: Cell, variant: TaskVariant) -> Role {
        if cell == self.start {
            Role::Start
        } else if cell == self.marker {
            variant.marker_role()
        } else if cell == self.goals[variant.success_goal()] {
            Role::Success
        } else if cell == self.goals[variant.failure_goal()] {
            Role::Failure
        } else {
            Role::Empty
        }
    }

    /// Full unmasked `[3, H, W]` image of the world under `variant`.
    pub fn render_ground_truth(&self, variant: TaskVariant) -> Tensor {
        let (h, w) = (self.height, self.width);
        let mut img = Tensor::zeros(&[3, h, w]);
        let data = img.data_mut();
        for r in 0..h {
            for c in 0..w {
                let rgb = self.palette.color(self.role_at(Cell::new(r, c), variant));
                for (ch, v) in rgb.iter().enumerate() {
                    data[(ch * h + r) * w + c] = *v;
                }
            }
        }
        img
    }
}
