//! Versioned JSON container for fitted regressors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZskError};
use crate::methods::ZeroShotRegressor;

pub const MODEL_FORMAT: &str = "zsk-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct ContainerRef<'a> {
    format: &'a str,
    version: u32,
    model: &'a ZeroShotRegressor,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct Container {
    model: ZeroShotRegressor,
}

pub fn model_to_json(model: &ZeroShotRegressor) -> Result<String> {
    Ok(serde_json::to_string(&ContainerRef {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        model,
    })?)
}

pub fn model_from_json(text: &str) -> Result<ZeroShotRegressor> {
    let header: Header = serde_json::from_str(text)?;
    if header.format != MODEL_FORMAT {
        return Err(ZskError::Schema {
            path: "<model>".into(),
            message: format!("not a model container (format `{}`)", header.format),
        });
    }
    if header.version != MODEL_VERSION {
        return Err(ZskError::ModelVersion {
            found: header.version,
            expected: MODEL_VERSION,
        });
    }
    Ok(serde_json::from_str::<Container>(text)?.model)
}

pub fn save_model(model: &ZeroShotRegressor, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| ZskError::io(parent, e))?;
    }
    fs::write(path, model_to_json(model)?).map_err(|e| ZskError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ZeroShotRegressor> {
    if !path.exists() {
        return Err(ZskError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| ZskError::io(path, e))?;
    model_from_json(&text).map_err(|e| match e {
        ZskError::Schema { message, .. } => ZskError::Schema {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::toy_dataset;
    use crate::methods::Method;
    use crate::svr::SvrConfig;

    #[test]
    fn round_trip_is_exact() {
        let ds = toy_dataset();
        for m in Method::COMPARED {
            let model = ZeroShotRegressor::fit(&ds, m, &SvrConfig::default().with_c(10.0)).unwrap();
            let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
            assert_eq!(back, model);
            assert_eq!(back.predict(&[3.0], &[2.0]).unwrap(), model.predict(&[3.0], &[2.0]).unwrap());
        }
    }

    #[test]
    fn version_mismatch() {
        let ds = toy_dataset();
        let model = ZeroShotRegressor::fit(&ds, Method::BlLinear, &SvrConfig::default()).unwrap();
        let text = model_to_json(&model).unwrap().replace("\"version\":1", "\"version\":99");
        assert!(matches!(
            model_from_json(&text),
            Err(ZskError::ModelVersion { found: 99, expected: 1 })
        ));
        assert!(model_from_json(r#"{"format":"other","version":1}"#).is_err());
    }
}
