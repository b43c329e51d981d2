use super::{boundary_trace, curl, Field, InteriorSampling};
use crate::error::{Error, Result};
use crate::geometry::{SurfaceMesh, Vec3};

/// Domain, velocity and separately transported vorticity at one instant.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub time: f64,
    pub sampling: InteriorSampling,
    pub velocity: Field,
    pub vorticity: Field,
}

impl FlowState {
    /// State whose vorticity is the discrete curl of `velocity`.
    pub fn new(sampling: InteriorSampling, velocity: Field, time: f64) -> Result<Self> {
        let vorticity = curl(&sampling, &velocity)?;
        Self::with_vorticity(sampling, velocity, vorticity, time)
    }

    pub fn with_vorticity(sampling: InteriorSampling, velocity: Field, vorticity: Field, time: f64) -> Result<Self> {
        let n = sampling.grid().n_cells();
        if velocity.ncomp != 3 || vorticity.ncomp != 3 || velocity.data.len() != 3 * n || vorticity.data.len() != 3 * n {
            return Err(Error::InvalidInput("velocity and vorticity must be 3-component fields on the grid".into()));
        }
        Ok(Self { time, sampling, velocity, vorticity })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        self.sampling.mesh()
    }

    /// Velocity at the mesh vertices.
    pub fn boundary_velocity(&self) -> Result<Vec<Vec3>> {
        boundary_trace(&self.sampling, &self.velocity)
    }

    /// Same domain with velocity and vorticity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            time: self.time,
            sampling: self.sampling.clone(),
            velocity: self.velocity.scaled(factor),
            vorticity: self.vorticity.scaled(factor),
        }
    }
}
