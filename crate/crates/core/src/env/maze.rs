//! Three rooms laid out in an N: the left and middle rooms connect through a
//! doorway at the top, the middle and right rooms through a doorway at the
//! bottom. The agent has a cell and one of four facings and sees a 4x4-cell
//! egocentric window rendered as a 16x16 grayscale patch. Each room has its
//! own wall texture and floor shade.
//!
//! Noise injection:
//! * `StateNoise`: the middle room's north wall shows fresh uniform pixel
//!   noise on every render in which it is visible.
//! * `ActionNoise`: choosing `Idle` replaces the whole observation with an
//!   image drawn uniformly from a fixed bank of random images.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Action, Environment, NoiseMode, StepResult};
use crate::error::{Error, Result};
use crate::numeric::rng::{seeded, stream, Rng};
use crate::numeric::RealVector;

pub const VIEW_CELLS: usize = 4;
pub const CELL_PIXELS: usize = 4;
pub const OBS_SIDE: usize = VIEW_CELLS * CELL_PIXELS;
pub const OBS_DIM: usize = OBS_SIDE * OBS_SIDE;
pub const FACINGS: usize = 4;
/// Lateral offset of the leftmost view column relative to the agent.
const VIEW_LEFT: i64 = -2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MazeAction {
    Forward = 0,
    TurnLeft = 1,
    TurnRight = 2,
    Idle = 3,
}

impl MazeAction {
    pub const COUNT: usize = 4;

    pub fn action(self) -> Action {
        Action::new(self as usize, Self::COUNT).expect("in range")
    }

    fn from_action(a: Action) -> Result<Self> {
        Ok(match a.index() {
            0 => MazeAction::Forward,
            1 => MazeAction::TurnLeft,
            2 => MazeAction::TurnRight,
            3 => MazeAction::Idle,
            index => {
                return Err(Error::InvalidAction {
                    index,
                    count: Self::COUNT,
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MazeConfig {
    pub room_width: usize,
    pub room_height: usize,
    pub noise_mode: NoiseMode,
    pub noise_bank_size: usize,
    /// Seed for the fixed noise-image bank.
    pub noise_bank_seed: u64,
    /// When set, entering this cell pays extrinsic reward 1 and ends the episode.
    pub goal: Option<(usize, usize)>,
}

impl Default for MazeConfig {
    fn default() -> Self {
        Self {
            room_width: 8,
            room_height: 8,
            noise_mode: NoiseMode::None,
            noise_bank_size: 64,
            noise_bank_seed: 0,
            goal: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pose {
    pub x: usize,
    pub y: usize,
    /// 0 = north, 1 = east, 2 = south, 3 = west.
    pub facing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Wall { room: usize, noisy: bool },
    Floor { room: usize },
}

pub struct GridMazeEnv {
    config: MazeConfig,
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    /// Dense index of each walkable cell, `None` for walls.
    walkable_index: Vec<Option<usize>>,
    walkable: Vec<(usize, usize)>,
    start: Pose,
    pose: Pose,
    noise_bank: Vec<RealVector>,
    rng: Rng,
}

const WALL_TEXTURES: [[[f64; CELL_PIXELS]; CELL_PIXELS]; 3] = [
    // horizontal stripes
    [
        [0.9, 0.9, 0.9, 0.9],
        [0.5, 0.5, 0.5, 0.5],
        [0.9, 0.9, 0.9, 0.9],
        [0.5, 0.5, 0.5, 0.5],
    ],
    // vertical stripes
    [
        [0.9, 0.5, 0.9, 0.5],
        [0.9, 0.5, 0.9, 0.5],
        [0.9, 0.5, 0.9, 0.5],
        [0.9, 0.5, 0.9, 0.5],
    ],
    // checkerboard
    [
        [0.95, 0.4, 0.95, 0.4],
        [0.4, 0.95, 0.4, 0.95],
        [0.95, 0.4, 0.95, 0.4],
        [0.4, 0.95, 0.4, 0.95],
    ],
];
const FLOOR_SHADES: [f64; 3] = [0.15, 0.3, 0.45];

fn facing_delta(facing: usize) -> (i64, i64) {
    match facing {
        0 => (0, -1),
        1 => (1, 0),
        2 => (0, 1),
        _ => (-1, 0),
    }
}

impl GridMazeEnv {
    pub fn new(config: MazeConfig) -> Result<Self> {
        if config.room_width < 2 || config.room_height < 2 {
            return Err(Error::InvalidConfig(
                "maze rooms must be at least 2x2 cells".into(),
            ));
        }
        if config.noise_bank_size == 0 {
            return Err(Error::InvalidConfig("noise bank must not be empty".into()));
        }
        let (rw, rh) = (config.room_width, config.room_height);
        let width = 3 * rw + 4;
        let height = rh + 2;
        let room_of = |x: usize| (x / (rw + 1)).min(2);
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let room = room_of(x);
                let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                let divider = x == rw + 1 || x == 2 * rw + 2;
                let door = (x == rw + 1 && y == 1) || (x == 2 * rw + 2 && y == rh);
                let cell = if (border || divider) && !door {
                    let noisy = y == 0 && room == 1 && x > rw + 1 && x < 2 * rw + 2;
                    Cell::Wall { room, noisy }
                } else {
                    Cell::Floor { room }
                };
                cells.push(cell);
            }
        }
        let mut walkable_index = vec![None; cells.len()];
        let mut walkable = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if matches!(cells[y * width + x], Cell::Floor { .. }) {
                    walkable_index[y * width + x] = Some(walkable.len());
                    walkable.push((x, y));
                }
            }
        }
        if let Some((gx, gy)) = config.goal {
            if gx >= width || gy >= height || walkable_index[gy * width + gx].is_none() {
                return Err(Error::InvalidConfig(format!(
                    "goal cell ({gx}, {gy}) is not walkable"
                )));
            }
        }
        let mut bank_rng = stream(config.noise_bank_seed, 0x6e6f_6973);
        let noise_bank = (0..config.noise_bank_size)
            .map(|_| {
                RealVector::from_trusted((0..OBS_DIM).map(|_| bank_rng.random::<f64>()).collect())
            })
            .collect();
        let start = Pose {
            x: 1,
            y: rh,
            facing: 0,
        };
        Ok(Self {
            config,
            width,
            height,
            cells,
            walkable_index,
            walkable,
            start,
            pose: start,
            noise_bank,
            rng: seeded(0),
        })
    }

    pub fn config(&self) -> &MazeConfig {
        &self.config
    }

    pub fn noise_mode(&self) -> NoiseMode {
        self.config.noise_mode
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn start_pose(&self) -> Pose {
        self.start
    }

    /// Places the agent at `pose`; rejects walls and bad facings.
    pub fn set_pose(&mut self, pose: Pose) -> Result<()> {
        if pose.facing >= FACINGS || self.cell_index(pose.x, pose.y).is_none() {
            return Err(Error::InvalidConfig(format!("pose {pose:?} is not walkable")));
        }
        self.pose = pose;
        Ok(())
    }

    pub fn walkable_cells(&self) -> &[(usize, usize)] {
        &self.walkable
    }

    pub fn cell_count(&self) -> usize {
        self.walkable.len()
    }

    pub fn noise_bank(&self) -> &[RealVector] {
        &self.noise_bank
    }

    pub fn cell_index(&self, x: usize, y: usize) -> Option<usize> {
        if x >= self.width || y >= self.height {
            return None;
        }
        self.walkable_index[y * self.width + x]
    }

    pub fn state_id(&self, pose: Pose) -> usize {
        let cell = self
            .cell_index(pose.x, pose.y)
            .expect("pose lies on a walkable cell");
        cell * FACINGS + pose.facing
    }

    /// Walkable-cell index of a latent state id.
    pub fn cell_of_state(state_id: usize) -> usize {
        state_id / FACINGS
    }

    pub fn room_of_cell(&self, x: usize, y: usize) -> usize {
        match self.cells[y * self.width + x] {
            Cell::Wall { room, .. } | Cell::Floor { room } => room,
        }
    }

    fn view_cell(&self, pose: Pose, depth: usize, lateral: i64) -> Option<Cell> {
        let (fx, fy) = facing_delta(pose.facing);
        let (rx, ry) = facing_delta((pose.facing + 1) % FACINGS);
        let x = pose.x as i64 + fx * depth as i64 + rx * lateral;
        let y = pose.y as i64 + fy * depth as i64 + ry * lateral;
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        Some(self.cells[y as usize * self.width + x as usize])
    }

    /// Whether the noisy wall falls inside the view window from `pose`.
    pub fn sees_noisy_wall(&self, pose: Pose) -> bool {
        (0..VIEW_CELLS).any(|depth| {
            (0..VIEW_CELLS as i64).any(|col| {
                matches!(
                    self.view_cell(pose, depth, VIEW_LEFT + col),
                    Some(Cell::Wall { noisy: true, .. })
                )
            })
        })
    }

    /// Renders the noise-free view from `pose`; noisy-wall pixels are filled
    /// by `noise` when given.
    fn render(&self, pose: Pose, mut noise: Option<&mut Rng>) -> RealVector {
        let mut pixels = vec![0.0; OBS_DIM];
        for depth in 0..VIEW_CELLS {
            let row = VIEW_CELLS - 1 - depth;
            for col in 0..VIEW_CELLS {
                let cell = self.view_cell(pose, depth, VIEW_LEFT + col as i64);
                for py in 0..CELL_PIXELS {
                    for px in 0..CELL_PIXELS {
                        let value = match cell {
                            None => 0.0,
                            Some(Cell::Floor { room }) => FLOOR_SHADES[room],
                            Some(Cell::Wall { noisy: true, .. }) if noise.is_some() => {
                                noise.as_deref_mut().unwrap().random::<f64>()
                            }
                            Some(Cell::Wall { room, .. }) => WALL_TEXTURES[room][py][px],
                        };
                        pixels[(row * CELL_PIXELS + py) * OBS_SIDE + col * CELL_PIXELS + px] =
                            value;
                    }
                }
            }
        }
        RealVector::from_trusted(pixels)
    }

    /// Noise-free rendering; what mode `None` shows at this pose.
    pub fn clean_observation(&self, pose: Pose) -> RealVector {
        self.render(pose, None)
    }

    fn observe(&mut self) -> RealVector {
        if self.config.noise_mode == NoiseMode::StateNoise {
            let mut rng = std::mem::replace(&mut self.rng, seeded(0));
            let obs = self.render(self.pose, Some(&mut rng));
            self.rng = rng;
            obs
        } else {
            self.render(self.pose, None)
        }
    }

    fn result(&self, observation: RealVector, reward: f64, done: bool) -> StepResult {
        StepResult {
            observation,
            extrinsic_reward: reward,
            done,
            latent_state_id: self.state_id(self.pose),
        }
    }
}

impl Environment for GridMazeEnv {
    fn observation_dim(&self) -> usize {
        OBS_DIM
    }

    fn action_count(&self) -> usize {
        MazeAction::COUNT
    }

    fn state_count(&self) -> usize {
        self.walkable.len() * FACINGS
    }

    fn reset(&mut self, seed: u64) -> StepResult {
        self.rng = seeded(seed);
        self.pose = self.start;
        let obs = self.observe();
        self.result(obs, 0.0, false)
    }

    fn step(&mut self, action: Action) -> Result<StepResult> {
        let action = MazeAction::from_action(action)?;
        match action {
            MazeAction::Forward => {
                let (dx, dy) = facing_delta(self.pose.facing);
                let nx = self.pose.x as i64 + dx;
                let ny = self.pose.y as i64 + dy;
                if nx >= 0 && ny >= 0 && self.cell_index(nx as usize, ny as usize).is_some() {
                    self.pose.x = nx as usize;
                    self.pose.y = ny as usize;
                }
            }
            MazeAction::TurnLeft => self.pose.facing = (self.pose.facing + FACINGS - 1) % FACINGS,
            MazeAction::TurnRight => self.pose.facing = (self.pose.facing + 1) % FACINGS,
            MazeAction::Idle => {}
        }
        let observation = if action == MazeAction::Idle
            && self.config.noise_mode == NoiseMode::ActionNoise
        {
            let pick = self.rng.random_range(0..self.noise_bank.len());
            self.noise_bank[pick].clone()
        } else {
            self.observe()
        };
        let at_goal = self.config.goal == Some((self.pose.x, self.pose.y));
        let reward = if at_goal { 1.0 } else { 0.0 };
        Ok(self.result(observation, reward, at_goal))
    }
}
