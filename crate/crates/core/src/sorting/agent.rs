use crate::dynamics::LFunctional;
use crate::error::{Error, Result};

/// Values the substrate broadcasts for a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickParams {
    pub nu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub l: LFunctional,
}

/// A sorting agent. All of its methods read only its own fields and the
/// broadcast values.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    id: usize,
    value: f64,
    mass: f64,
    active: bool,
    activated_at: Option<u64>,
    last_sent: f64,
}

impl Agent {
    pub fn new(id: usize, value: f64, mass: f64) -> Self {
        Self { id, value, mass, active: true, activated_at: None, last_sent: 0.0 }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn activated_at(&self) -> Option<u64> {
        self.activated_at
    }

    /// Local interaction weight `K_i = m_i ((1/nu) L(q_i, nu m_i) + lambda)`.
    pub fn emit(&mut self, p: &TickParams) -> Result<f64> {
        let f = p.l.eval(self.value, p.nu * self.mass) / p.nu + p.lambda;
        if self.mass > 0.0 && !(f > 0.0 && f.is_finite()) {
            return Err(Error::CertificateViolated { cell: self.id, factor: f, step: 0 });
        }
        self.last_sent = if self.mass > 0.0 { self.mass * f } else { 0.0 };
        Ok(self.last_sent)
    }

    /// Moves towards `K_i / Z` using the broadcast sum.
    pub fn absorb(&mut self, z: f64, p: &TickParams) {
        self.mass = (1.0 - p.alpha) * self.mass + p.alpha * (self.last_sent / z);
    }

    pub(crate) fn set_mass(&mut self, m: f64) {
        self.mass = m;
    }

    pub(crate) fn deactivate(&mut self) {
        self.active = false;
        self.mass = 0.0;
    }

    pub(crate) fn mark_activated(&mut self, tick: u64) {
        self.activated_at = Some(tick);
    }
}
