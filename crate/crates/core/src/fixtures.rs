//! Published class matrices shipped with the crate.
//!
//! * `uda_classes.csv` — 61 universities, overall class (`ALL`) and class in
//!   each of eight hard-science disciplines they are active in.
//! * `physics_classes.csv` — 43 universities, Physics class (`ALL`) and class
//!   in each of its eight fields FIS/01–FIS/08; `physics_staff.csv` holds
//!   each university's Physics research staff.
//!
//! Both are literal transcriptions, printing errors included.

use std::collections::BTreeMap;

use crate::dispersion::ClassProfile;
use crate::error::Result;
use crate::export::{read_class_matrix, read_staff_csv};

pub const UDA_CLASSES_CSV: &str = include_str!("../fixtures/uda_classes.csv");
pub const PHYSICS_CLASSES_CSV: &str = include_str!("../fixtures/physics_classes.csv");
pub const PHYSICS_STAFF_CSV: &str = include_str!("../fixtures/physics_staff.csv");

/// `(file name, contents)` for each shipped fixture.
pub const ALL: [(&str, &str); 3] = [
    ("uda_classes.csv", UDA_CLASSES_CSV),
    ("physics_classes.csv", PHYSICS_CLASSES_CSV),
    ("physics_staff.csv", PHYSICS_STAFF_CSV),
];

pub fn uda_profiles() -> Result<Vec<ClassProfile>> {
    read_class_matrix(UDA_CLASSES_CSV.as_bytes(), None)
}

pub fn physics_staff() -> Result<BTreeMap<String, u64>> {
    read_staff_csv(PHYSICS_STAFF_CSV.as_bytes())
}

pub fn physics_profiles() -> Result<Vec<ClassProfile>> {
    let staff = physics_staff()?;
    read_class_matrix(PHYSICS_CLASSES_CSV.as_bytes(), Some(&staff))
}
