use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Ion species tracked per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ion {
    Na,
    K,
    Cl,
    Ca,
    H,
}

impl Ion {
    pub const ALL: [Ion; 5] = [Ion::Na, Ion::K, Ion::Cl, Ion::Ca, Ion::H];

    pub const fn valence(self) -> i32 {
        match self {
            Ion::Na | Ion::K | Ion::H => 1,
            Ion::Cl => -1,
            Ion::Ca => 2,
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Ion::Na => "na",
            Ion::K => "k",
            Ion::Cl => "cl",
            Ion::Ca => "ca",
            Ion::H => "h",
        }
    }
}

impl fmt::Display for Ion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per [`Ion`], serialized with named fields.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IonMap<T> {
    pub na: T,
    pub k: T,
    pub cl: T,
    pub ca: T,
    pub h: T,
}

impl<T> IonMap<T> {
    pub fn from_fn(mut f: impl FnMut(Ion) -> T) -> Self {
        IonMap {
            na: f(Ion::Na),
            k: f(Ion::K),
            cl: f(Ion::Cl),
            ca: f(Ion::Ca),
            h: f(Ion::H),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Ion, &T) -> U) -> IonMap<U> {
        IonMap::from_fn(|ion| f(ion, &self[ion]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ion, &T)> {
        Ion::ALL.into_iter().map(move |ion| (ion, &self[ion]))
    }
}

impl<T: Copy> IonMap<T> {
    pub fn splat(value: T) -> Self {
        IonMap::from_fn(|_| value)
    }
}

impl<T> Index<Ion> for IonMap<T> {
    type Output = T;

    fn index(&self, ion: Ion) -> &T {
        match ion {
            Ion::Na => &self.na,
            Ion::K => &self.k,
            Ion::Cl => &self.cl,
            Ion::Ca => &self.ca,
            Ion::H => &self.h,
        }
    }
}

impl<T> IndexMut<Ion> for IonMap<T> {
    fn index_mut(&mut self, ion: Ion) -> &mut T {
        match ion {
            Ion::Na => &mut self.na,
            Ion::K => &mut self.k,
            Ion::Cl => &mut self.cl,
            Ion::Ca => &mut self.ca,
            Ion::H => &mut self.h,
        }
    }
}
