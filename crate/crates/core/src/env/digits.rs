use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::numeric::rng::seeded;
use crate::numeric::RealVector;

pub const DIGIT_SIDE: usize = 28;
pub const DIGIT_PIXELS: usize = DIGIT_SIDE * DIGIT_SIDE;
pub const CLASS_COUNT: usize = 10;

/// Images grouped by class label.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitBank {
    classes: Vec<Vec<RealVector>>,
}

impl DigitBank {
    pub fn new(classes: Vec<Vec<RealVector>>) -> Result<Self> {
        if classes.len() != CLASS_COUNT {
            return Err(Error::InvalidConfig(format!(
                "digit bank needs {CLASS_COUNT} classes, got {}",
                classes.len()
            )));
        }
        for (label, images) in classes.iter().enumerate() {
            if images.is_empty() {
                return Err(Error::InvalidConfig(format!("digit class {label} has no images")));
            }
            for img in images {
                if img.dim() != DIGIT_PIXELS {
                    return Err(Error::dims("digit image", DIGIT_PIXELS, img.dim()));
                }
                if !img.in_unit_box() {
                    return Err(Error::InvalidConfig(format!(
                        "digit class {label} has pixels outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { classes })
    }

    pub fn class(&self, label: usize) -> &[RealVector] {
        &self.classes[label]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const BLOCK: usize = 2;
const BLOCKS_PER_SIDE: usize = DIGIT_SIDE / BLOCK;

/// Ten procedural 28x28 patterns, one per class, built from 2x2 ink blocks.
///
/// Classes 0 and 1 ink each block with probability 1/2. For classes 2..=9
/// every block is inked in exactly four of the eight images, so the pixelwise
/// mean of those eight classes is 0.5 everywhere and each of them sits at the
/// same squared distance (0.25 per pixel) from that mean.
pub fn synthetic_digit_bank(seed: u64) -> DigitBank {
    let mut rng = seeded(seed);
    let mut images = vec![vec![0.0; DIGIT_PIXELS]; CLASS_COUNT];
    let mut draw = [false; 8];
    for by in 0..BLOCKS_PER_SIDE {
        for bx in 0..BLOCKS_PER_SIDE {
            let mut inked = [false; CLASS_COUNT];
            inked[0] = rng.random_bool(0.5);
            inked[1] = rng.random_bool(0.5);
            draw.iter_mut().enumerate().for_each(|(i, d)| *d = i < 4);
            draw.shuffle(&mut rng);
            inked[2..].copy_from_slice(&draw);
            for (label, img) in images.iter_mut().enumerate() {
                if !inked[label] {
                    continue;
                }
                for dy in 0..BLOCK {
                    for dx in 0..BLOCK {
                        img[(by * BLOCK + dy) * DIGIT_SIDE + bx * BLOCK + dx] = 1.0;
                    }
                }
            }
        }
    }
    let classes = images
        .into_iter()
        .map(|img| vec![RealVector::from_trusted(img)])
        .collect();
    DigitBank::new(classes).expect("synthetic bank satisfies its invariants")
}
