//! Hand-written notebooks used across test suites.

/// Five-cell notebook: load data, scale it, reload it under another name,
/// split the scaled data, then train and evaluate a model.
pub const LEAKY_PIPELINE: [&str; 5] = [
    "import pandas as pd\nd = pd.read_csv('data.csv')",
    "from sklearn.preprocessing import StandardScaler\nscaler = StandardScaler()\nx = scaler.fit_transform(d)",
    "import pandas as pd\nx = pd.read_csv('data.csv')",
    "from sklearn.model_selection import train_test_split\ny = x[:, -1]\nx_train, x_test, y_train, y_test = train_test_split(x, y)",
    "from sklearn.linear_model import LogisticRegression\nfrom sklearn.metrics import accuracy_score\nmodel = LogisticRegression()\nmodel.fit(x_train, y_train)\ny_pred = model.predict(x_test)\nprint(accuracy_score(y_test, y_pred))",
];
