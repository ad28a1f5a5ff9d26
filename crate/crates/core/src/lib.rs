pub mod complex;
pub mod codes;
pub mod covering;
pub mod cupcap;
pub mod gfq;
pub mod products;
pub mod sheaf;
pub mod subdivide;

pub use complex::{CellId, CellPoset, ComplexError, OrderMap, SimplicialPoset};
pub use gfq::{Field, FieldError, FqMatrix, MatrixError};
pub use sheaf::{Chain, Cochain, Sheaf, SheafData, SheafError};
