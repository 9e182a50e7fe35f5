use super::{next_cell, Action, Cell, TaskVariant, WorldSpec};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Episode length cap.
pub const MAX_STEPS: usize = 200;

/// Cells revealed around `pos`: the 5x5 neighbourhood minus its four
/// corners, clipped to the grid. Row-major order.
pub fn visibility_footprint(pos: Cell, height: usize, width: usize) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(21);
    for dr in -2isize..=2 {
        for dc in -2isize..=2 {
            if dr.abs() == 2 && dc.abs() == 2 {
                continue;
            }
            let r = pos.r as isize + dr;
            let c = pos.c as isize + dc;
            if r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width {
                cells.push(Cell::new(r as usize, c as usize));
            }
        }
    }
    cells
}

/// What the agent has seen so far this episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `[3, H, W]`, true colours where observed, 0 elsewhere.
    pub image: Tensor,
    /// `[1, H, W]`, 1 where observed.
    pub mask: Tensor,
    pub agent_pos: Cell,
}

impl Observation {
    pub fn height(&self) -> usize {
        self.mask.dims()[1]
    }

    pub fn width(&self) -> usize {
        self.mask.dims()[2]
    }

    pub fn seen(&self, cell: Cell) -> bool {
        self.mask.data()[cell.r * self.width() + cell.c] != 0.0
    }

    pub fn seen_count(&self) -> usize {
        self.mask.data().iter().filter(|&&m| m != 0.0).count()
    }

    /// `[4, H, W]`: masked RGB followed by the mask channel.
    pub fn encoder_input(&self) -> Tensor {
        let mut data = Vec::with_capacity(self.image.len() + self.mask.len());
        data.extend_from_slice(self.image.data());
        data.extend_from_slice(self.mask.data());
        Tensor::from_vec(&[4, self.height(), self.width()], data).expect("observation dims")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub forced_termination: bool,
}

/// One running episode. Single owner; clone to fork.
#[derive(Debug, Clone)]
pub struct Environment {
    world: WorldSpec,
    variant: TaskVariant,
    truth: Tensor,
    image: Tensor,
    mask: Tensor,
    pos: Cell,
    steps: usize,
    done: bool,
}

impl Environment {
    /// Starts a fresh episode: agent at the start cell, mask holding only
    /// the initial footprint.
    pub fn reset(world: &WorldSpec, variant: TaskVariant) -> (Self, Observation) {
        let (h, w) = (world.height, world.width);
        let mut env = Environment {
            world: world.clone(),
            variant,
            truth: world.render_ground_truth(variant),
            image: Tensor::zeros(&[3, h, w]),
            mask: Tensor::zeros(&[1, h, w]),
            pos: world.start,
            steps: 0,
            done: false,
        };
        env.reveal();
        let obs = env.observation();
        (env, obs)
    }

    fn reveal(&mut self) {
        let (h, w) = (self.world.height, self.world.width);
        for cell in visibility_footprint(self.pos, h, w) {
            let i = cell.r * w + cell.c;
            if self.mask.data()[i] != 0.0 {
                continue;
            }
            self.mask.data_mut()[i] = 1.0;
            for ch in 0..3 {
                self.image.data_mut()[ch * h * w + i] = self.truth.data()[ch * h * w + i];
            }
        }
    }

    pub fn observation(&self) -> Observation {
        Observation {
            image: self.image.clone(),
            mask: self.mask.clone(),
            agent_pos: self.pos,
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        self.pos = next_cell(self.pos, action, self.world.height, self.world.width);
        self.steps += 1;
        self.reveal();
        let goals = self.world.goals;
        let (reward, terminal) = if self.pos == goals[self.variant.success_goal()] {
            (1.0, true)
        } else if self.pos == goals[self.variant.failure_goal()] {
            (-1.0, true)
        } else {
            (0.0, false)
        };
        let forced = !terminal && self.steps >= MAX_STEPS;
        self.done = terminal || forced;
        Ok(StepResult {
            observation: self.observation(),
            reward,
            done: self.done,
            forced_termination: forced,
        })
    }

    pub fn world(&self) -> &WorldSpec {
        &self.world
    }

    pub fn variant(&self) -> TaskVariant {
        self.variant
    }

    pub fn position(&self) -> Cell {
        self.pos
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Palette;

    #[test]
    fn footprint_sizes() {
        assert_eq!(visibility_footprint(Cell::new(10, 10), 28, 28).len(), 21);
        // Independent count: all 25 offsets, drop the clipped corners, keep
        // what lands in bounds.
        let enumerate = |r: isize, c: isize| {
            (-2isize..=2)
                .flat_map(|dr| (-2isize..=2).map(move |dc| (dr, dc)))
                .filter(|(dr, dc)| !(dr.abs() == 2 && dc.abs() == 2))
                .filter(|(dr, dc)| (0..28).contains(&(r + dr)) && (0..28).contains(&(c + dc)))
                .count()
        };
        let corner = visibility_footprint(Cell::new(0, 0), 28, 28);
        assert_eq!(corner.len(), enumerate(0, 0));
        assert_eq!(corner.len(), 8);
        assert_eq!(visibility_footprint(Cell::new(0, 5), 28, 28).len(), enumerate(0, 5));
        assert_eq!(visibility_footprint(Cell::new(1, 1), 28, 28).len(), enumerate(1, 1));
        assert!(corner.contains(&Cell::new(0, 0)));
    }

    #[test]
    fn reset_stamps_footprint() {
        let w = WorldSpec::builtin("bw-e").unwrap();
        let (_, obs) = Environment::reset(&w, TaskVariant::A);
        assert!(obs.seen(w.start));
        assert_eq!(obs.seen_count(), 21);
        let (_, again) = Environment::reset(&w, TaskVariant::A);
        assert_eq!(obs, again);
    }

    #[test]
    fn image_matches_truth_under_mask() {
        let w = WorldSpec::builtin("bw-e").unwrap();
        let (mut env, _) = Environment::reset(&w, TaskVariant::B);
        let truth = w.render_ground_truth(TaskVariant::B);
        for _ in 0..12 {
            env.step(Action::Down).unwrap();
        }
        let obs = env.observation();
        let hw = w.cells();
        for i in 0..hw {
            for ch in 0..3 {
                let expected = if obs.mask.data()[i] == 1.0 {
                    truth.data()[ch * hw + i]
                } else {
                    0.0
                };
                assert_eq!(obs.image.data()[ch * hw + i], expected);
            }
        }
    }

    #[test]
    fn boundary_bump_keeps_position() {
        let w = WorldSpec::new(
            "t",
            6,
            6,
            Cell::new(0, 0),
            Cell::new(5, 0),
            [Cell::new(5, 5), Cell::new(0, 5)],
            Palette::default(),
        )
        .unwrap();
        let (mut env, _) = Environment::reset(&w, TaskVariant::A);
        let r = env.step(Action::Up).unwrap();
        assert_eq!(r.observation.agent_pos, Cell::new(0, 0));
        assert_eq!(r.reward, 0.0);
        assert!(!r.done);
    }

    #[test]
    fn success_and_failure_terminate() {
        let w = WorldSpec::new(
            "t",
            6,
            6,
            Cell::new(0, 4),
            Cell::new(5, 0),
            [Cell::new(0, 5), Cell::new(0, 3)],
            Palette::default(),
        )
        .unwrap();
        let (mut env, _) = Environment::reset(&w, TaskVariant::A);
        let r = env.step(Action::Right).unwrap();
        assert_eq!((r.reward, r.done, r.forced_termination), (1.0, true, false));
        assert!(matches!(env.step(Action::Left), Err(Error::EpisodeDone)));

        let (mut env, _) = Environment::reset(&w, TaskVariant::A);
        let r = env.step(Action::Left).unwrap();
        assert_eq!((r.reward, r.done), (-1.0, true));
    }

    #[test]
    fn cap_forces_termination() {
        let w = WorldSpec::builtin("bw-h").unwrap();
        let (mut env, _) = Environment::reset(&w, TaskVariant::A);
        let mut last = None;
        for i in 0..MAX_STEPS {
            let r = env.step(Action::Up).unwrap();
            assert_eq!(r.done, i + 1 == MAX_STEPS);
            last = Some(r);
        }
        let last = last.unwrap();
        assert_eq!(last.reward, 0.0);
        assert!(last.forced_termination);
        assert!(env.step(Action::Up).is_err());
    }
}
