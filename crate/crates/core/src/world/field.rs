use super::{GridPos, Lattice, Topology, WorldError};

/// Non-negative real value per patch (pheromone, nest scent).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    lattice: Lattice,
    values: Vec<f64>,
}

fn check_fraction(name: &'static str, value: f64) -> Result<(), WorldError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(WorldError::FractionOutOfRange { name, value })
    }
}

impl ScalarField {
    pub fn zeros(lattice: Lattice) -> Self {
        Self {
            lattice,
            values: vec![0.0; lattice.len()],
        }
    }

    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(GridPos) -> f64) -> Self {
        let values = lattice
            .positions()
            .map(|p| {
                let v = f(p);
                assert!(v.is_finite() && v >= 0.0, "field value {v} at {p}");
                v
            })
            .collect();
        Self { lattice, values }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn get(&self, pos: GridPos) -> f64 {
        self.values[self.lattice.index(pos)]
    }

    pub fn add(&mut self, pos: GridPos, amount: f64) {
        debug_assert!(amount >= 0.0 && amount.is_finite());
        let i = self.lattice.index(pos);
        self.values[i] += amount;
    }

    pub fn set(&mut self, pos: GridPos, value: f64) {
        assert!(value.is_finite() && value >= 0.0, "field value {value}");
        let i = self.lattice.index(pos);
        self.values[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Multiplies every value by `1 - rate`.
    pub fn evaporate(&mut self, rate: f64) -> Result<(), WorldError> {
        check_fraction("evaporation rate", rate)?;
        let keep = 1.0 - rate;
        self.values.iter_mut().for_each(|v| *v *= keep);
        Ok(())
    }

    /// Each patch hands `share` of its value to its Moore neighbors in equal
    /// eighths. Eighths that would fall off a bounded grid stay at the source,
    /// so the total is conserved.
    pub fn diffuse(&mut self, share: f64) -> Result<(), WorldError> {
        check_fraction("diffusion share", share)?;
        if share == 0.0 {
            return Ok(());
        }
        let lattice = self.lattice;
        let mut next = vec![0.0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let portion = v * share / 8.0;
            let pos = lattice.pos(i);
            let neighbors = lattice.neighbors(pos, Topology::Moore8);
            for q in &neighbors {
                next[lattice.index(*q)] += portion;
            }
            let retained = 8 - neighbors.len();
            next[i] += v * (1.0 - share) + portion * retained as f64;
        }
        self.values = next;
        Ok(())
    }
}

/// Value-returning form of [`ScalarField::evaporate`].
pub fn field_evaporate(mut field: ScalarField, rate: f64) -> Result<ScalarField, WorldError> {
    field.evaporate(rate)?;
    Ok(field)
}

/// Value-returning form of [`ScalarField::diffuse`].
pub fn field_diffuse(mut field: ScalarField, share: f64) -> Result<ScalarField, WorldError> {
    field.diffuse(share)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::RngState;
    use proptest::prelude::*;

    fn lattice(w: usize, h: usize) -> Lattice {
        Lattice::new(w, h, false).unwrap()
    }

    fn uniform_total(total: f64) -> ScalarField {
        let l = lattice(5, 4);
        ScalarField::from_fn(l, |_| total / l.len() as f64)
    }

    #[test]
    fn evaporation_identity_and_annihilation() {
        let f = field_evaporate(uniform_total(10.0), 0.0).unwrap();
        assert!((f.total() - 10.0).abs() < 1e-12);
        let f = field_evaporate(uniform_total(10.0), 1.0).unwrap();
        assert_eq!(f.total(), 0.0);
    }

    #[test]
    fn evaporation_is_geometric() {
        let mut f = uniform_total(10.0);
        for _ in 0..5 {
            f.evaporate(0.1).unwrap();
        }
        // 10 * 0.9^5
        assert!((f.total() - 5.9049).abs() < 1e-9, "{}", f.total());
    }

    #[test]
    fn rates_out_of_range_are_errors() {
        let mut f = uniform_total(1.0);
        assert!(f.evaporate(1.5).is_err());
        assert!(f.evaporate(-0.1).is_err());
        assert!(f.diffuse(2.0).is_err());
        assert!(f.diffuse(f64::NAN).is_err());
    }

    #[test]
    fn zero_share_leaves_field_unchanged() {
        let mut rng = RngState::new(5);
        let l = lattice(6, 6);
        let f = ScalarField::from_fn(l, |_| rng.next_f64());
        assert_eq!(field_diffuse(f.clone(), 0.0).unwrap(), f);
    }

    #[test]
    fn full_share_splits_equally() {
        let l = lattice(5, 5);
        let mut f = ScalarField::zeros(l);
        f.set(GridPos::new(2, 2), 8.0);
        f.diffuse(1.0).unwrap();
        assert_eq!(f.get(GridPos::new(2, 2)), 0.0);
        for q in l.neighbors(GridPos::new(2, 2), Topology::Moore8) {
            assert_eq!(f.get(q), 1.0);
        }
        assert_eq!(f.total(), 8.0);
    }

    #[test]
    fn corner_retains_undistributed_share() {
        let l = lattice(5, 5);
        let mut f = ScalarField::zeros(l);
        f.set(GridPos::new(0, 0), 8.0);
        f.diffuse(1.0).unwrap();
        // three neighbors in bounds, five eighths stay
        assert_eq!(f.get(GridPos::new(0, 0)), 5.0);
        assert_eq!(f.get(GridPos::new(1, 1)), 1.0);
    }

    #[test]
    fn repeated_diffusion_conserves_mass() {
        let mut rng = RngState::new(99);
        let l = lattice(23, 17);
        let mut f = ScalarField::from_fn(l, |_| rng.next_f64() * 10.0);
        // independent oracle: plain sum of the initial values
        let expected: f64 = f.values().iter().copied().sum();
        for _ in 0..100 {
            f.diffuse(0.5).unwrap();
        }
        assert!((f.total() - expected).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn evaporate_then_diffuse_stays_non_negative(
            seed in any::<u64>(), rate in 0.0f64..=1.0, share in 0.0f64..=1.0, wrap in any::<bool>()
        ) {
            let mut rng = RngState::new(seed);
            let l = Lattice::new(7, 5, wrap).unwrap();
            let mut f = ScalarField::from_fn(l, |_| rng.next_f64() * 3.0);
            let before = f.total();
            f.evaporate(rate).unwrap();
            f.diffuse(share).unwrap();
            prop_assert!(f.values().iter().all(|v| *v >= 0.0 && v.is_finite()));
            prop_assert!((f.total() - before * (1.0 - rate)).abs() < 1e-9);
        }
    }
}
