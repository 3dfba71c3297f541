//! Plain-text network checkpoints.
//!
//! ```text
//! # qier-checkpoint v1
//! scalar f64
//! fingerprint <hex>
//! shape 2 512,256,128 8
//! tensor dense0.weight 512 2
//! <one row of values per line>
//! tensor dense0.bias 512
//! ...
//! ```
//!
//! Values use the shortest round-trip decimal form, so loading restores the
//! exact bits.

use std::fmt::Write as _;
use std::path::Path;

use super::network::{Network, NetworkShape};
use crate::error::{Error, Result};
use crate::num::Real;

const MAGIC: &str = "# qier-checkpoint v1";

fn scalar_name<T>() -> &'static str {
    if std::mem::size_of::<T>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

fn layer_name(i: usize, count: usize) -> String {
    if i + 1 == count {
        "head".to_string()
    } else {
        format!("dense{i}")
    }
}

pub struct Checkpoint<T> {
    pub network: Network<T>,
    /// Caller-supplied digest of the configuration the network was trained under.
    pub fingerprint: String,
}

pub fn to_text<T: Real>(net: &Network<T>, fingerprint: &str) -> String {
    let shape = net.shape();
    let hidden: Vec<String> = shape.hidden.iter().map(|h| h.to_string()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "scalar {}", scalar_name::<T>());
    let _ = writeln!(out, "fingerprint {fingerprint}");
    let _ = writeln!(out, "shape {} {} {}", shape.input, hidden.join(","), shape.actions);
    let count = net.layers().len();
    for (i, l) in net.layers().iter().enumerate() {
        let name = layer_name(i, count);
        let _ = writeln!(out, "tensor {name}.weight {} {}", l.fan_out, l.fan_in);
        for row in net.weights(i).chunks(l.fan_in) {
            write_row(&mut out, row);
        }
        let _ = writeln!(out, "tensor {name}.bias {}", l.fan_out);
        write_row(&mut out, net.bias(i));
    }
    out
}

fn write_row<T: Real>(out: &mut String, row: &[T]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub fn from_text<T: Real>(text: &str) -> Result<Checkpoint<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected {what}")));

    let (n, magic) = next("header")?;
    if magic != MAGIC {
        return Err(Error::parse(n, "not a qier checkpoint"));
    }
    let (n, scalar) = next("scalar")?;
    if scalar.strip_prefix("scalar ") != Some(scalar_name::<T>()) {
        return Err(Error::parse(n, format!("expected `scalar {}`", scalar_name::<T>())));
    }
    let (n, fp) = next("fingerprint")?;
    let fingerprint = fp.strip_prefix("fingerprint ").ok_or_else(|| Error::parse(n, "missing fingerprint"))?.to_string();
    let (n, sline) = next("shape")?;
    let shape = parse_shape(sline).ok_or_else(|| Error::parse(n, "malformed shape line"))?;
    shape.validate()?;

    let mut params: Vec<T> = Vec::with_capacity(shape.param_count());
    let dims = shape.layer_dims();
    for (i, &(fan_in, fan_out)) in dims.iter().enumerate() {
        let name = layer_name(i, dims.len());
        let (n, head) = next("tensor header")?;
        if head != format!("tensor {name}.weight {fan_out} {fan_in}") {
            return Err(Error::parse(n, format!("expected weight tensor for {name}")));
        }
        for _ in 0..fan_out {
            let (n, row) = next("weight row")?;
            parse_row(row, fan_in, n, &mut params)?;
        }
        let (n, head) = next("tensor header")?;
        if head != format!("tensor {name}.bias {fan_out}") {
            return Err(Error::parse(n, format!("expected bias tensor for {name}")));
        }
        let (n, row) = next("bias row")?;
        parse_row(row, fan_out, n, &mut params)?;
    }
    let network = Network::from_params(shape, params)?;
    if !network.is_finite() {
        return Err(Error::Domain("checkpoint holds non-finite parameters".into()));
    }
    Ok(Checkpoint { network, fingerprint })
}

fn parse_shape(line: &str) -> Option<NetworkShape> {
    let mut it = line.strip_prefix("shape ")?.split(' ');
    let input = it.next()?.parse().ok()?;
    let hidden_field = it.next()?;
    let hidden = if hidden_field.is_empty() {
        Vec::new()
    } else {
        hidden_field.split(',').map(|h| h.parse().ok()).collect::<Option<Vec<usize>>>()?
    };
    let actions = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some(NetworkShape { input, hidden, actions })
}

fn parse_row<T: Real>(row: &str, width: usize, line: usize, into: &mut Vec<T>) -> Result<()> {
    let before = into.len();
    for tok in row.split(' ') {
        let v = tok.parse::<T>().map_err(|_| Error::parse(line, format!("bad number `{tok}`")))?;
        into.push(v);
    }
    if into.len() - before != width {
        return Err(Error::parse(line, format!("expected {width} values")));
    }
    Ok(())
}

pub fn save<T: Real>(net: &Network<T>, fingerprint: &str, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(net, fingerprint))?;
    Ok(())
}

pub fn load<T: Real>(path: &Path) -> Result<Checkpoint<T>> {
    from_text(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SimRng;
    use rand::SeedableRng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let net = Network::<f64>::init(NetworkShape { input: 2, hidden: vec![7, 5], actions: 8 }, &mut SimRng::seed_from_u64(11));
        let text = to_text(&net, "abc123");
        let back = from_text::<f64>(&text).unwrap();
        assert_eq!(back.fingerprint, "abc123");
        assert_eq!(back.network.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>(), net.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>());
        assert_eq!(back.network.shape(), net.shape());
    }

    #[test]
    fn roundtrip_f32_via_file() {
        let net = Network::<f32>::init(NetworkShape { input: 2, hidden: vec![3], actions: 2 }, &mut SimRng::seed_from_u64(2));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save(&net, "x", &path).unwrap();
        assert_eq!(load::<f32>(&path).unwrap().network, net);
        assert!(load::<f64>(&path).is_err());
    }

    #[test]
    fn rejects_truncated_and_malformed() {
        let net = Network::<f64>::init(NetworkShape { input: 2, hidden: vec![3], actions: 2 }, &mut SimRng::seed_from_u64(2));
        let text = to_text(&net, "x");
        let cut: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(from_text::<f64>(&cut).is_err());
        assert!(from_text::<f64>(&text.replace("tensor head.bias", "tensor tail.bias")).is_err());
        assert!(from_text::<f64>("hello").is_err());
    }
}
