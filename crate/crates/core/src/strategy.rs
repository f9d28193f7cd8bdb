//! Teacher and student strategies for the binary model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// How the teacher turns observations into transmitted bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Teacher {
    /// Transmit each raw observation.
    Forwarding,
    /// Transmit the running majority of all observations so far.
    Cumulative,
    /// Learn silently for the first `floor((1 - eps) n)` steps, then repeat
    /// the majority of that block.
    EpsTeaching(f64),
}

/// How the student decodes the received bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Student {
    /// Majority vote over all received bits.
    Majority,
    /// Majority vote over the last `floor(eps n)` received bits.
    EpsMajority(f64),
}

/// A teacher strategy paired with a student decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyCombo {
    pub teacher: Teacher,
    pub student: Student,
}

impl StrategyCombo {
    /// Builds a combo, rejecting pairings that have no meaning in the model.
    pub fn new(teacher: Teacher, student: Student) -> Result<Self> {
        for eps in [teacher_eps(teacher), student_eps(student)].into_iter().flatten() {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(domain(format!("eps = {eps} must lie in (0, 1]")));
            }
        }
        match (teacher, student) {
            (Teacher::EpsTeaching(a), Student::EpsMajority(b)) if a != b => Err(domain(format!(
                "eps-teaching and eps-majority must share one eps (got {a} and {b})"
            ))),
            (Teacher::EpsTeaching(_), Student::Majority) => Err(Error::UnsupportedCombo(
                "eps-teaching requires an eps-majority student".into(),
            )),
            _ => Ok(Self { teacher, student }),
        }
    }

    pub fn forwarding_majority() -> Self {
        Self { teacher: Teacher::Forwarding, student: Student::Majority }
    }

    pub fn cumulative_majority() -> Self {
        Self { teacher: Teacher::Cumulative, student: Student::Majority }
    }

    pub fn eps_teaching(eps: f64) -> Result<Self> {
        Self::new(Teacher::EpsTeaching(eps), Student::EpsMajority(eps))
    }

    pub fn cumulative_eps(eps: f64) -> Result<Self> {
        Self::new(Teacher::Cumulative, Student::EpsMajority(eps))
    }

    pub fn forwarding_eps(eps: f64) -> Result<Self> {
        Self::new(Teacher::Forwarding, Student::EpsMajority(eps))
    }

    /// Number of trailing slots the student votes over.
    pub fn student_window(&self, n: usize) -> usize {
        match self.student {
            Student::Majority => n,
            Student::EpsMajority(eps) => floor_frac(eps, n),
        }
    }

    /// Length of the ε-teacher's learning block, if any.
    pub fn teacher_block(&self, n: usize) -> Option<usize> {
        match self.teacher {
            Teacher::EpsTeaching(eps) => Some(floor_frac(1.0 - eps, n)),
            _ => None,
        }
    }

    /// Checks that every window is non-empty at horizon `n`.
    pub fn check_horizon(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(domain("horizon n must be at least 1"));
        }
        if self.student_window(n) == 0 {
            return Err(domain(format!("student window floor(eps n) is empty at n = {n}")));
        }
        if self.teacher_block(n) == Some(0) {
            return Err(domain(format!(
                "teacher learning block floor((1 - eps) n) is empty at n = {n}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for StrategyCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.teacher {
            Teacher::Forwarding => "forwarding".to_string(),
            Teacher::Cumulative => "cumulative".to_string(),
            Teacher::EpsTeaching(e) => format!("eps-teaching({e})"),
        };
        let s = match self.student {
            Student::Majority => "majority".to_string(),
            Student::EpsMajority(e) => format!("eps-majority({e})"),
        };
        write!(f, "{t}+{s}")
    }
}

fn teacher_eps(t: Teacher) -> Option<f64> {
    match t {
        Teacher::EpsTeaching(e) => Some(e),
        _ => None,
    }
}

fn student_eps(s: Student) -> Option<f64> {
    match s {
        Student::EpsMajority(e) => Some(e),
        Student::Majority => None,
    }
}

/// `floor(frac * n)`, tolerant of products like `0.7 * 10 = 6.999...`.
pub fn floor_frac(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    (x + 1e-9).floor().max(0.0) as usize
}
