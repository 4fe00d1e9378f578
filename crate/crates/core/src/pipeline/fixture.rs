//! Generator for the bundled sample dataset (`data/bolt_tests.csv`).
//!
//! Elongations and the fracture pattern are the published tensile results
//! for ten printed ACME bolts, copied verbatim (including the two Test-10
//! entries that are an order of magnitude off). Loads and dimensional
//! inspections were never published, so they are synthesized here from a
//! fixed seed and committed; the test below keeps the file in sync.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const FIXTURE_SEED: u64 = 20_240_917;

/// `None` marks the test at which the bolt broke.
pub const MAX_POSITION: [&[Option<f64>]; 10] = [
    &[Some(0.055), None],
    &[Some(0.055), Some(0.04), None],
    &[
        Some(0.052), Some(0.049), Some(0.044), Some(0.045), Some(0.043), Some(0.063),
        Some(0.064), Some(0.064), Some(0.068), Some(0.074), Some(0.08),
    ],
    &[
        Some(0.051), Some(0.046), Some(0.052), Some(0.049), Some(0.055), Some(0.062),
        Some(0.065), Some(0.07), Some(0.064), Some(0.76), None,
    ],
    &[
        Some(0.047), Some(0.049), Some(0.047), Some(0.053), Some(0.059), Some(0.061),
        Some(0.062), Some(0.063), Some(0.066), Some(0.076), Some(0.081),
    ],
    &[
        Some(0.05), Some(0.051), Some(0.041), Some(0.055), Some(0.045), Some(0.06),
        Some(0.063), Some(0.069), Some(0.07), Some(0.74), Some(0.081),
    ],
    &[
        Some(0.05), Some(0.047), Some(0.051), Some(0.058), Some(0.054), Some(0.064),
        Some(0.067), Some(0.065), Some(0.068), Some(0.078), Some(0.083),
    ],
    &[
        Some(0.045), Some(0.045), Some(0.057), Some(0.041), Some(0.046), Some(0.064),
        Some(0.068), Some(0.064), Some(0.075), Some(0.079), Some(0.084),
    ],
    &[
        Some(0.055), Some(0.047), Some(0.04), Some(0.044), Some(0.053), Some(0.063),
        Some(0.067), Some(0.063), Some(0.066), Some(0.075), Some(0.083),
    ],
    &[
        Some(0.05), Some(0.052), Some(0.049), Some(0.047), Some(0.054), Some(0.054),
        Some(0.062), Some(0.072), Some(0.072), Some(0.078), Some(0.082),
    ],
];

/// Nominal load per inch of elongation (lbf/in).
const STIFFNESS: f64 = 2270.0;
/// Peak load at fracture relative to what an intact bolt would carry
/// at its last recorded elongation.
const FRACTURE_LOAD_RATIO: f64 = 0.8;

struct DimSpec {
    base: &'static str,
    nominal: f64,
    sd: f64,
    decimals: usize,
}

const fn dim(base: &'static str, nominal: f64, sd: f64, decimals: usize) -> DimSpec {
    DimSpec {
        base,
        nominal,
        sd,
        decimals,
    }
}

/// Inches, except thread flank angles in degrees. The 29 degree ACME
/// thread has a nominal 14.5 degree flank; printed flanks scatter widely.
const DIMENSIONS: [DimSpec; 17] = [
    dim("Overall_Length", 4.0, 0.003, 4),
    dim("Major_Diameter_1", 1.0, 0.004, 4),
    dim("Major_Diameter_2", 1.0, 0.004, 4),
    dim("Minor_Diameter_1", 0.75, 0.004, 4),
    dim("Minor_Diameter_2", 0.75, 0.004, 4),
    dim("Pitch_Left_1", 0.25, 0.002, 4),
    dim("Pitch_Left_2", 0.25, 0.002, 4),
    dim("Pitch_Right_1", 0.25, 0.002, 4),
    dim("Pitch_Right_2", 0.25, 0.002, 4),
    dim("Angle_Left_1", 14.5, 1.6, 2),
    dim("Angle_Left_2", 14.5, 1.4, 2),
    dim("Angle_Left_3", 14.5, 1.3, 2),
    dim("Angle_Left_4", 14.5, 1.5, 2),
    dim("Angle_Right_1", 14.5, 1.2, 2),
    dim("Angle_Right_2", 14.5, 1.4, 2),
    dim("Angle_Right_3", 14.5, 1.3, 2),
    dim("Angle_Right_4", 14.5, 1.1, 2),
];

/// Cells overwritten after generation: (bolt, test, column, value).
/// An empty value blanks the cell.
const OVERRIDES: &[(usize, u32, &str, &str)] = &[
    (3, 1, "Overall_Length", "4.0010"),
    (3, 1, "max_load", "118.0"),
    (5, 3, "Pitch_Left_1", ""),
    (5, 3, "Pitch_Left_1_90", "0.2481"),
    (7, 4, "Angle_Left_2_90", ""),
    (9, 6, "Minor_Diameter_2", ""),
    (6, 5, "Major_Diameter_2", ""),
    (6, 5, "Major_Diameter_2_90", ""),
    (10, 8, "Angle_Right_3", ""),
];

pub fn header() -> Vec<String> {
    let mut h: Vec<String> = ["bolt_id", "test_num", "max_load", "max_position", "fracture"]
        .map(str::to_owned)
        .to_vec();
    for d in &DIMENSIONS {
        h.push(d.base.to_owned());
        h.push(format!("{}_90", d.base));
    }
    h
}

/// Render the fixture CSV. Pure function of [`FIXTURE_SEED`].
pub fn generate() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut z = move || std_normal.sample(&mut rng);
    let header = header();

    let mut out = header.join(",");
    out.push('\n');
    for (b, series) in MAX_POSITION.iter().enumerate() {
        let bolt = b + 1;
        let stiffness = STIFFNESS * (1.0 + 0.02 * z());
        let mut observed = Vec::new();
        for (t, pos) in series.iter().enumerate() {
            let test = t as u32 + 1;
            let fracture = pos.is_none();
            let load = match pos {
                // Values ten times the neighbouring tests are transcription
                // slips; loads follow the plausible elongation.
                Some(p) if *p > 0.5 => stiffness * p / 10.0 * (1.0 + 0.02 * z()),
                Some(p) => {
                    observed.push(*p);
                    stiffness * p * (1.0 + 0.01 * z())
                }
                None => {
                    let last = *observed.last().expect("a bolt cannot break on its first test");
                    FRACTURE_LOAD_RATIO * stiffness * last * (1.0 + 0.02 * z())
                }
            };
            let mut cells = vec![
                format!("Bolt_{bolt}"),
                test.to_string(),
                format!("{load:.1}"),
                pos.map_or("Failure".to_owned(), |p| p.to_string()),
                fracture.to_string(),
            ];
            for d in &DIMENSIONS {
                // A broken bolt cannot be inspected; its cells stay empty.
                if fracture {
                    cells.extend([String::new(), String::new()]);
                    continue;
                }
                // All bolts come from one print batch; inspections scatter
                // independently around nominal.
                let v = d.nominal + d.sd * z();
                let v90 = v + 0.3 * d.sd * z();
                cells.push(format!("{v:.*}", d.decimals));
                cells.push(format!("{v90:.*}", d.decimals));
            }
            for (ob, ot, col, val) in OVERRIDES {
                if *ob == bolt && *ot == test {
                    let i = header.iter().position(|h| h == col).expect("override column");
                    cells[i] = (*val).to_owned();
                }
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn committed_fixture_matches_generator() {
        let committed = include_str!("../../data/bolt_tests.csv");
        assert_eq!(committed, generate(), "regenerate data/bolt_tests.csv");
    }

    #[test]
    fn shape() {
        let text = generate();
        assert_eq!(text.lines().count(), 1 + 93);
        assert_eq!(header().len(), 5 + 34);
        assert_eq!(text.lines().filter(|l| l.contains("Failure")).count(), 3);
    }
}
