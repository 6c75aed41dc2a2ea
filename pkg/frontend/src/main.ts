import { ServiceClient } from "./api.js";
import { Dashboard } from "./app.js";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");

// same-origin by default; ?service=http://host:port targets another server
const override = new URLSearchParams(window.location.search).get("service");
const dashboard = new Dashboard(root, new ServiceClient(override ?? ""));
void dashboard.start();
