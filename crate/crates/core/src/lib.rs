pub mod cloze;
pub mod corpus;
pub mod expr;
pub mod htmlgen;
pub mod numfmt;
pub mod table;
pub mod template;
pub mod xmlout;
pub mod pastedata;
