//! Exact computation with coclass families of finite p-groups and their
//! Quillen categories.
//!
//! The crate builds the groups `G_x` of a coclass family from pro-p data
//! (a finite quotient `P`, a uniserial action on a translation lattice
//! `T`, a degree-2 cocycle for the extension and a degree-3 class for
//! the twist), computes semi-skeletons of the Quillen categories of the
//! family members and of the pro-p group itself, and verifies the
//! equivalences between them — all over exact `Z/p^N` arithmetic.
//!
//! The usual flow:
//!
//! ```
//! use coclass::family::{fixtures, Family};
//! use coclass::quillen::{skeleton_gx, compare_with_bruteforce};
//!
//! let fam = Family::new(fixtures::dihedral2())?;
//! let level = fam.level(1)?;                  // the member of order 32
//! let cat = skeleton_gx(&level)?;             // its semi-skeleton
//! assert_eq!(cat.objects.len(), 10);
//! let oracle = compare_with_bruteforce(&level, &cat, 1 << 12)?;
//! assert!(oracle.agrees());
//! # Ok::<(), coclass::Error>(())
//! ```

pub mod abelian;
pub mod cochain;
pub mod error;
pub mod extension;
pub mod family;
pub mod group;
pub mod io;
pub mod padic;
pub mod par;
pub mod quillen;
pub mod render;
pub mod splitting;

pub use error::{Error, Result};
pub use family::{Family, FamilyLevel, ProPData};
pub use quillen::Category;
