use crate::{CreditError, Q};
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AvbClass {
    A,
    B,
}

/// Class A quantities that enter the class B maximum credit.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherClass {
    pub max_frame: Q,
    pub interfering: Q,
    pub idle: Q,
    pub send: Q,
}

/// Shaper parameters of one AVB class at one port.
///
/// `interfering` is the largest frame of any lower priority class (bits),
/// `max_frame` the largest frame of this class (bits).
#[derive(Debug, Clone, PartialEq)]
pub struct CreditParams {
    pub class: AvbClass,
    pub idle: Q,
    pub send: Q,
    pub rate: Q,
    pub interfering: Q,
    pub max_frame: Q,
    pub higher: Option<HigherClass>,
}

impl CreditParams {
    pub fn new(class: AvbClass, idle: Q, rate: Q, interfering: Q, max_frame: Q) -> Result<Self, CreditError> {
        let p = CreditParams { class, idle, send: idle - rate, rate, interfering, max_frame, higher: None };
        p.validate()?;
        Ok(p)
    }

    /// Class A at a port whose class B and BE maxima are `l_b` and `l_be`.
    pub fn class_a(idle: Q, rate: Q, l_a: Q, l_b: Q, l_be: Q) -> Result<Self, CreditError> {
        Self::new(AvbClass::A, idle, rate, l_b.max(l_be), l_a)
    }

    /// Class B under the class A parameters `a`.
    pub fn class_b(idle: Q, rate: Q, l_b: Q, l_be: Q, a: &CreditParams) -> Result<Self, CreditError> {
        let mut p = Self::new(AvbClass::B, idle, rate, l_be, l_b)?;
        p.higher = Some(HigherClass { max_frame: a.max_frame, interfering: a.interfering, idle: a.idle, send: a.send });
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CreditError> {
        if self.rate <= Q::zero() {
            return Err(CreditError::ZeroRate);
        }
        if self.idle <= Q::zero() {
            return Err(CreditError::NonPositiveIdle);
        }
        if self.send >= Q::zero() {
            return Err(CreditError::NonNegativeSend { idle: self.idle, rate: self.rate });
        }
        if self.idle - self.send != self.rate {
            return Err(CreditError::SlopeMismatch { send: self.send });
        }
        if self.interfering.is_negative() || self.max_frame.is_negative() {
            return Err(CreditError::NegativeLength);
        }
        if let Some(h) = &self.higher {
            if h.idle <= Q::zero() {
                return Err(CreditError::NonPositiveIdle);
            }
            if h.send >= Q::zero() {
                return Err(CreditError::NonNegativeSend { idle: h.idle, rate: self.rate });
            }
            if h.max_frame.is_negative() || h.interfering.is_negative() {
                return Err(CreditError::NegativeLength);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CreditBounds {
    pub v_max: Q,
    pub v_min: Q,
}

/// Credit extrema of one class.
///
/// Class B uses the closed form
/// `I_B (Lbar_B/C + L_A/C - (Lbar_A/C)(I_A/S_A))`. It is attained when the
/// largest lower-priority frame seen by class A is a BE frame; otherwise it is
/// an upper bound.
pub fn credit_bounds(p: &CreditParams) -> Result<CreditBounds, CreditError> {
    p.validate()?;
    let c = p.rate;
    let v_min = p.max_frame / c * p.send;
    let v_max = match p.class {
        AvbClass::A => p.interfering / c * p.idle,
        AvbClass::B => {
            let a = p.higher.as_ref().ok_or(CreditError::MissingHigherClass)?;
            p.idle * (p.interfering / c + a.max_frame / c - a.interfering / c * (a.idle / a.send))
        }
    };
    Ok(CreditBounds { v_max, v_min })
}

/// Durations of the rising (`up`) and falling (`down`) credit phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseTimes {
    pub up: Q,
    pub down: Q,
}

pub fn phase_times(p: &CreditParams, b: CreditBounds) -> Result<PhaseTimes, CreditError> {
    p.validate()?;
    if b.v_max.is_negative() || b.v_min.is_positive() {
        return Err(CreditError::BadExtrema);
    }
    Ok(PhaseTimes { up: b.v_max / p.idle, down: (b.v_max - b.v_min) / p.send.abs() })
}
