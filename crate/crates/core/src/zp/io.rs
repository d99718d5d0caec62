//! Flat-file formats: grid functions as `index,value`, indicator sets as a
//! single `index` column of members.

use std::io::{Read, Write};

use super::field::PrimeField;
use super::grid::{GridFn, IndicatorSet};
use crate::error::{Error, Result};

pub fn write_gridfn<W: Write>(f: &GridFn, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "value"])?;
    for (n, v) in f.values().iter().enumerate() {
        // `{}` on f64 prints the shortest string that parses back to the same bits
        w.write_record([n.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a density function; rows may come in any order but every index must appear once.
pub fn read_gridfn<R: Read>(field: PrimeField, input: R) -> Result<GridFn> {
    let mut r = csv::Reader::from_reader(input);
    let mut values = vec![None; field.p()];
    for rec in r.records() {
        let rec = rec?;
        let index: usize = parse(rec.get(0))?;
        let value: f64 = parse(rec.get(1))?;
        let slot = values.get_mut(index).ok_or(Error::Csv(format!("index {index} >= p")))?;
        if slot.replace(value).is_some() {
            return Err(Error::Csv(format!("duplicate index {index}")));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(n, v)| v.ok_or(Error::Csv(format!("missing index {n}"))))
        .collect::<Result<Vec<_>>>()?;
    GridFn::density(field, values)
}

pub fn write_indicator<W: Write>(s: &IndicatorSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index"])?;
    for n in s.iter() {
        w.write_record([n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_indicator<R: Read>(field: PrimeField, input: R) -> Result<IndicatorSet> {
    let mut r = csv::Reader::from_reader(input);
    let mut s = IndicatorSet::empty(field);
    for rec in r.records() {
        let n: usize = parse(rec?.get(0))?;
        if n >= field.p() {
            return Err(Error::Csv(format!("member {n} >= p")));
        }
        s.insert(n);
    }
    Ok(s)
}

fn parse<T: std::str::FromStr>(field: Option<&str>) -> Result<T> {
    let raw = field.ok_or_else(|| Error::Csv("missing column".into()))?;
    raw.trim().parse().map_err(|_| Error::Csv(format!("cannot parse {raw:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn gridfn_round_trip_is_bit_exact(values in prop::collection::vec(0.0f64..=1.0, 13)) {
            let field = PrimeField::new(13).unwrap();
            let f = GridFn::density(field, values).unwrap();
            let mut buf = Vec::new();
            write_gridfn(&f, &mut buf).unwrap();
            let back = read_gridfn(field, buf.as_slice()).unwrap();
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn indicator_round_trip(mask in 0u64..(1 << 17)) {
            let field = PrimeField::new(17).unwrap();
            let s = IndicatorSet::from_mask(field, mask);
            let mut buf = Vec::new();
            write_indicator(&s, &mut buf).unwrap();
            prop_assert_eq!(read_indicator(field, buf.as_slice()).unwrap(), s);
        }
    }

    #[test]
    fn header_and_errors() {
        let field = PrimeField::new(3).unwrap();
        let f = GridFn::density(field, vec![0.25, 1.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_gridfn(&f, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,value\n0,0.25\n1,1\n2,0\n");
        assert!(read_gridfn(field, "index,value\n0,0.5\n1,0.5\n".as_bytes()).is_err());
        assert!(read_indicator(field, "index\n3\n".as_bytes()).is_err());
    }
}
