use std::collections::HashMap;

use num_traits::One;

use super::{Monomial, PolyError, Polynomial, Rational, Role, VarId};

/// Affine change of variables: every variable is sent to a polynomial of
/// degree at most one in the same space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    dim: usize,
    images: Vec<Polynomial>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        let images = (0..3 * dim)
            .map(|pos| Polynomial::var(dim, VarId::from_position(pos, dim)).unwrap())
            .collect();
        AffineMap { dim, images }
    }

    pub fn new(dim: usize, images: Vec<Polynomial>) -> Result<Self, PolyError> {
        if images.len() != 3 * dim {
            return Err(PolyError::InvalidMap(format!(
                "expected {} images, got {}",
                3 * dim,
                images.len()
            )));
        }
        for img in &images {
            Self::check_image(dim, img)?;
        }
        Ok(AffineMap { dim, images })
    }

    fn check_image(dim: usize, img: &Polynomial) -> Result<(), PolyError> {
        if img.dim() != dim {
            return Err(PolyError::InvalidMap(format!(
                "image has dimension {}, map has {dim}",
                img.dim()
            )));
        }
        if img.degree().unwrap_or(0) > 1 {
            return Err(PolyError::InvalidMap(format!("image {img} is not affine")));
        }
        Ok(())
    }

    pub fn with_image(mut self, var: VarId, image: Polynomial) -> Result<Self, PolyError> {
        let pos = var.position(self.dim)?;
        Self::check_image(self.dim, &image)?;
        self.images[pos] = image;
        Ok(self)
    }

    /// `x -> x + τ`, `y -> y - τ`, τ fixed.
    pub fn shift(dim: usize) -> Self {
        let mut map = AffineMap::identity(dim);
        for i in 1..=dim {
            let t = Polynomial::var(dim, VarId::tau(i)).unwrap();
            map.images[VarId::x(i).position(dim).unwrap()] =
                &Polynomial::var(dim, VarId::x(i)).unwrap() + &t;
            map.images[VarId::y(i).position(dim).unwrap()] =
                &Polynomial::var(dim, VarId::y(i)).unwrap() - &t;
        }
        map
    }

    /// Applies the square matrix `a` to each listed block of variables:
    /// `v_i -> sum_j a[i][j] v_j` for every role in `roles`.
    pub fn linear(dim: usize, a: &[Vec<Rational>], roles: &[Role]) -> Result<Self, PolyError> {
        if a.len() != dim || a.iter().any(|row| row.len() != dim) {
            return Err(PolyError::InvalidMap(format!("matrix must be {dim}x{dim}")));
        }
        let mut map = AffineMap::identity(dim);
        for &role in roles {
            for (i, row) in a.iter().enumerate() {
                let mut img = Polynomial::zero(dim);
                for (j, c) in row.iter().enumerate() {
                    let v = Polynomial::var(dim, VarId::new(role, j + 1))?;
                    img = &img + &v.scale(c);
                }
                map.images[VarId::new(role, i + 1).position(dim)?] = img;
            }
        }
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn image(&self, var: VarId) -> Result<&Polynomial, PolyError> {
        Ok(&self.images[var.position(self.dim)?])
    }

    /// The map that substitutes `self` first and then `then`:
    /// `p.substitute(&a).substitute(&b) == p.substitute(&a.compose(&b))`.
    pub fn compose(&self, then: &AffineMap) -> Result<AffineMap, PolyError> {
        if self.dim != then.dim {
            return Err(PolyError::DimensionMismatch {
                left: self.dim,
                right: then.dim,
            });
        }
        let images = self
            .images
            .iter()
            .map(|img| img.substitute(then))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AffineMap {
            dim: self.dim,
            images,
        })
    }

    fn is_identity_at(&self, pos: usize) -> bool {
        let img = &self.images[pos];
        if img.num_terms() != 1 {
            return false;
        }
        let (m, c) = img.leading_term().unwrap();
        c.is_one() && m.exponents()[pos] == 1 && m.degree() == 1
    }
}

pub(super) fn substitute(p: &Polynomial, map: &AffineMap) -> Result<Polynomial, PolyError> {
    if p.dim() != map.dim {
        return Err(PolyError::InvalidMap(format!(
            "map has dimension {}, polynomial has {}",
            map.dim,
            p.dim()
        )));
    }
    let dim = p.dim();
    let fixed: Vec<bool> = (0..3 * dim).map(|pos| map.is_identity_at(pos)).collect();
    let mut powers: HashMap<(usize, u32), Polynomial> = HashMap::new();
    let mut out = Polynomial::zero(dim);
    for (m, c) in p.terms() {
        // Variables mapped to themselves are carried along as a monomial.
        let mut kept = vec![0u32; 3 * dim];
        let mut acc = Polynomial::constant(dim, c.clone());
        for (pos, &e) in m.exponents().iter().enumerate() {
            if e == 0 {
                continue;
            }
            if fixed[pos] {
                kept[pos] = e;
                continue;
            }
            let pw = powers
                .entry((pos, e))
                .or_insert_with(|| map.images[pos].pow(e));
            acc = &acc * pw;
            if acc.is_zero() {
                break;
            }
        }
        if !acc.is_zero() {
            out = &out + &acc.mul_monomial(&Monomial::from_exponents(kept));
        }
    }
    Ok(out)
}
