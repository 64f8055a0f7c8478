pub mod collection;
pub mod model;
pub mod rdfa;
pub mod services;
pub mod sparql;
pub mod store;
pub mod vocab;
pub mod xml;
