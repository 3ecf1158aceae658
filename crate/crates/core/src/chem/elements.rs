use std::fmt;

use serde::{Deserialize, Serialize};

struct ElementData {
    symbol: &'static str,
    mass: f64,
}

// Standard atomic weights (IUPAC, abridged). Index = atomic number - 1.
#[rustfmt::skip]
const TABLE: &[ElementData] = &[
    ElementData { symbol: "H", mass: 1.008 },
    ElementData { symbol: "He", mass: 4.0026 },
    ElementData { symbol: "Li", mass: 6.94 },
    ElementData { symbol: "Be", mass: 9.0122 },
    ElementData { symbol: "B", mass: 10.81 },
    ElementData { symbol: "C", mass: 12.011 },
    ElementData { symbol: "N", mass: 14.007 },
    ElementData { symbol: "O", mass: 15.999 },
    ElementData { symbol: "F", mass: 18.998 },
    ElementData { symbol: "Ne", mass: 20.180 },
    ElementData { symbol: "Na", mass: 22.990 },
    ElementData { symbol: "Mg", mass: 24.305 },
    ElementData { symbol: "Al", mass: 26.982 },
    ElementData { symbol: "Si", mass: 28.085 },
    ElementData { symbol: "P", mass: 30.974 },
    ElementData { symbol: "S", mass: 32.06 },
    ElementData { symbol: "Cl", mass: 35.45 },
    ElementData { symbol: "Ar", mass: 39.948 },
    ElementData { symbol: "K", mass: 39.098 },
    ElementData { symbol: "Ca", mass: 40.078 },
    ElementData { symbol: "Sc", mass: 44.956 },
    ElementData { symbol: "Ti", mass: 47.867 },
    ElementData { symbol: "V", mass: 50.942 },
    ElementData { symbol: "Cr", mass: 51.996 },
    ElementData { symbol: "Mn", mass: 54.938 },
    ElementData { symbol: "Fe", mass: 55.845 },
    ElementData { symbol: "Co", mass: 58.933 },
    ElementData { symbol: "Ni", mass: 58.693 },
    ElementData { symbol: "Cu", mass: 63.546 },
    ElementData { symbol: "Zn", mass: 65.38 },
    ElementData { symbol: "Ga", mass: 69.723 },
    ElementData { symbol: "Ge", mass: 72.630 },
    ElementData { symbol: "As", mass: 74.922 },
    ElementData { symbol: "Se", mass: 78.971 },
    ElementData { symbol: "Br", mass: 79.904 },
    ElementData { symbol: "Kr", mass: 83.798 },
    ElementData { symbol: "Rb", mass: 85.468 },
    ElementData { symbol: "Sr", mass: 87.62 },
    ElementData { symbol: "Y", mass: 88.906 },
    ElementData { symbol: "Zr", mass: 91.224 },
    ElementData { symbol: "Nb", mass: 92.906 },
    ElementData { symbol: "Mo", mass: 95.95 },
    ElementData { symbol: "Tc", mass: 98.0 },
    ElementData { symbol: "Ru", mass: 101.07 },
    ElementData { symbol: "Rh", mass: 102.91 },
    ElementData { symbol: "Pd", mass: 106.42 },
    ElementData { symbol: "Ag", mass: 107.87 },
    ElementData { symbol: "Cd", mass: 112.41 },
    ElementData { symbol: "In", mass: 114.82 },
    ElementData { symbol: "Sn", mass: 118.71 },
    ElementData { symbol: "Sb", mass: 121.76 },
    ElementData { symbol: "Te", mass: 127.60 },
    ElementData { symbol: "I", mass: 126.90 },
    ElementData { symbol: "Xe", mass: 131.29 },
    ElementData { symbol: "Cs", mass: 132.91 },
    ElementData { symbol: "Ba", mass: 137.33 },
    ElementData { symbol: "La", mass: 138.91 },
    ElementData { symbol: "Ce", mass: 140.12 },
    ElementData { symbol: "Pr", mass: 140.91 },
    ElementData { symbol: "Nd", mass: 144.24 },
    ElementData { symbol: "Pm", mass: 145.0 },
    ElementData { symbol: "Sm", mass: 150.36 },
    ElementData { symbol: "Eu", mass: 151.96 },
    ElementData { symbol: "Gd", mass: 157.25 },
    ElementData { symbol: "Tb", mass: 158.93 },
    ElementData { symbol: "Dy", mass: 162.50 },
    ElementData { symbol: "Ho", mass: 164.93 },
    ElementData { symbol: "Er", mass: 167.26 },
    ElementData { symbol: "Tm", mass: 168.93 },
    ElementData { symbol: "Yb", mass: 173.05 },
    ElementData { symbol: "Lu", mass: 174.97 },
    ElementData { symbol: "Hf", mass: 178.49 },
    ElementData { symbol: "Ta", mass: 180.95 },
    ElementData { symbol: "W", mass: 183.84 },
    ElementData { symbol: "Re", mass: 186.21 },
    ElementData { symbol: "Os", mass: 190.23 },
    ElementData { symbol: "Ir", mass: 192.22 },
    ElementData { symbol: "Pt", mass: 195.08 },
    ElementData { symbol: "Au", mass: 196.97 },
    ElementData { symbol: "Hg", mass: 200.59 },
    ElementData { symbol: "Tl", mass: 204.38 },
    ElementData { symbol: "Pb", mass: 207.2 },
    ElementData { symbol: "Bi", mass: 208.98 },
    ElementData { symbol: "Po", mass: 209.0 },
    ElementData { symbol: "At", mass: 210.0 },
    ElementData { symbol: "Rn", mass: 222.0 },
    ElementData { symbol: "Fr", mass: 223.0 },
    ElementData { symbol: "Ra", mass: 226.0 },
    ElementData { symbol: "Ac", mass: 227.0 },
    ElementData { symbol: "Th", mass: 232.04 },
    ElementData { symbol: "Pa", mass: 231.04 },
    ElementData { symbol: "U", mass: 238.03 },
];

/// A chemical element, stored as its atomic number.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Element(u8);

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (z >= 1 && (z as usize) <= TABLE.len()).then_some(Element(z))
    }

    /// Looks up a symbol with exact capitalization ("Cl", not "CL").
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE.iter().position(|e| e.symbol == symbol).map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        TABLE[self.0 as usize - 1].symbol
    }

    /// Standard atomic weight in Da.
    pub fn mass(self) -> f64 {
        TABLE[self.0 as usize - 1].mass
    }

    /// Normal valences for the SMILES organic subset, lowest first.
    pub(crate) fn default_valences(self) -> &'static [u8] {
        match self.0 {
            5 => &[3],
            6 => &[4],
            7 | 15 => &[3, 5],
            8 => &[2],
            16 => &[2, 4, 6],
            9 | 17 | 35 | 53 => &[1],
            _ => &[],
        }
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl TryFrom<String> for Element {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Element::from_symbol(&value).ok_or_else(|| format!("unknown element symbol `{value}`"))
    }
}

impl From<Element> for String {
    fn from(e: Element) -> String {
        e.symbol().to_string()
    }
}
