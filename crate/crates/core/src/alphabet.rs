//! Symbols, aligned atoms and variable subsets.
//!
//! Every table in the crate is keyed by an [`Atom`], a fixed `[x, y, z]`
//! triple. Marginals over a subset of the variables keep the same key type
//! with the dropped coordinates zeroed, so one table type serves all seven
//! marginals of a three-variable law.

use std::fmt;

/// An alphabet element. Alphabets are subsets of the nonnegative integers.
pub type Symbol = u64;

/// A joint outcome `[x, y, z]`.
pub type Atom = [Symbol; 3];

/// A subset of the variables `{X, Y, Z}` as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vars(u8);

impl Vars {
    pub const NONE: Vars = Vars(0);
    pub const X: Vars = Vars(0b001);
    pub const Y: Vars = Vars(0b010);
    pub const Z: Vars = Vars(0b100);
    pub const XY: Vars = Vars(0b011);
    pub const XZ: Vars = Vars(0b101);
    pub const YZ: Vars = Vars(0b110);
    pub const XYZ: Vars = Vars(0b111);

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Option<Vars> {
        (bits <= 0b111).then_some(Vars(bits))
    }

    pub const fn contains(self, other: Vars) -> bool {
        self.0 & other.0 == other.0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Nonempty subsets of `self`, largest first, then in X/Y/Z order.
    ///
    /// For `XYZ` this yields `XYZ, XY, YZ, XZ, X, Y, Z`, the order in which
    /// the entropy terms of the unified score are itemized.
    pub fn subsets(self) -> Vec<Vars> {
        const ORDER: [Vars; 7] = [
            Vars::XYZ,
            Vars::XY,
            Vars::YZ,
            Vars::XZ,
            Vars::X,
            Vars::Y,
            Vars::Z,
        ];
        ORDER.into_iter().filter(|v| self.contains(*v)).collect()
    }

    /// Zero the coordinates not in `self`.
    #[inline]
    pub fn project(self, atom: &Atom) -> Atom {
        let mut out = [0; 3];
        for (i, slot) in out.iter_mut().enumerate() {
            if self.0 & (1 << i) != 0 {
                *slot = atom[i];
            }
        }
        out
    }

    pub fn label(self) -> &'static str {
        match self.0 {
            0b001 => "X",
            0b010 => "Y",
            0b100 => "Z",
            0b011 => "XY",
            0b101 => "XZ",
            0b110 => "YZ",
            0b111 => "XYZ",
            _ => "",
        }
    }

    pub fn parse(label: &str) -> Option<Vars> {
        Some(match label {
            "X" => Vars::X,
            "Y" => Vars::Y,
            "Z" => Vars::Z,
            "XY" => Vars::XY,
            "XZ" => Vars::XZ,
            "YZ" => Vars::YZ,
            "XYZ" => Vars::XYZ,
            _ => return None,
        })
    }
}

impl fmt::Debug for Vars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vars({})", self.label())
    }
}

impl fmt::Display for Vars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_of_xyz_in_report_order() {
        let labels: Vec<_> = Vars::XYZ.subsets().into_iter().map(Vars::label).collect();
        assert_eq!(labels, ["XYZ", "XY", "YZ", "XZ", "X", "Y", "Z"]);
        let labels: Vec<_> = Vars::YZ.subsets().into_iter().map(Vars::label).collect();
        assert_eq!(labels, ["YZ", "Y", "Z"]);
    }

    #[test]
    fn project_zeroes_dropped_coordinates() {
        assert_eq!(Vars::XZ.project(&[4, 5, 6]), [4, 0, 6]);
        assert_eq!(Vars::XYZ.project(&[4, 5, 6]), [4, 5, 6]);
        for v in Vars::XYZ.subsets() {
            assert_eq!(Vars::parse(v.label()), Some(v));
        }
    }
}
