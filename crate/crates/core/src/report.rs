use alloc::string::String;
use alloc::vec::Vec;

/// Outcome of one inequality or identity check.
///
/// `worst_defect` follows the convention "positive means the inequality
/// holds with room to spare": it is the minimum of `rhs − lhs` over the
/// points examined (or `−|defect|` for identity checks), and
/// `pass ⇔ worst_defect ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub worst_defect: f64,
    /// Grid node `(i, j)` or sample index where the worst defect occurred.
    pub worst_location: Option<(usize, usize)>,
    pub tolerance: f64,
    pub pass: bool,
    /// Free-form remarks (constants used, skipped links, ...).
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn new(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        worst_defect: f64,
        worst_location: Option<(usize, usize)>,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            worst_defect,
            worst_location,
            tolerance,
            pass: worst_defect >= -tolerance,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Forces a failure regardless of the defect (e.g. NaN inputs).
    pub(crate) fn fail(mut self, note: impl Into<String>) -> Self {
        self.pass = false;
        self.notes.push(note.into());
        self
    }
}

/// Running minimum of `rhs − lhs` with its location.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WorstDefect {
    pub defect: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub location: Option<(usize, usize)>,
    pub saw_nan: bool,
}

impl WorstDefect {
    pub fn new() -> Self {
        Self {
            defect: f64::INFINITY,
            lhs: f64::NAN,
            rhs: f64::NAN,
            location: None,
            saw_nan: false,
        }
    }

    pub fn push(&mut self, lhs: f64, rhs: f64, location: (usize, usize)) {
        let d = rhs - lhs;
        if d.is_nan() {
            self.saw_nan = true;
            return;
        }
        if d < self.defect {
            self.defect = d;
            self.lhs = lhs;
            self.rhs = rhs;
            self.location = Some(location);
        }
    }

    pub fn into_report(self, name: &str, tolerance: f64) -> EstimateReport {
        let r = EstimateReport::new(name, self.lhs, self.rhs, self.defect, self.location, tolerance);
        if self.saw_nan {
            r.fail("non-finite value encountered")
        } else {
            r
        }
    }
}
