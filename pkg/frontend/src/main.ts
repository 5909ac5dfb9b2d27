import { ConsultationClient } from "./api";
import { ChatApp } from "./app";

declare global {
  interface Window {
    TEACHREC_SERVICE_URL?: string;
  }
}

function serviceUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("service");
  if (fromQuery !== null && fromQuery !== "") return fromQuery;
  if (window.TEACHREC_SERVICE_URL) return window.TEACHREC_SERVICE_URL;
  return window.location.origin;
}

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}
new ChatApp(root, new ConsultationClient(serviceUrl())).boot();
